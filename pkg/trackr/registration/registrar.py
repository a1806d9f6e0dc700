"""trackr.registration.registrar

Per-sequence registration to the canonical frame.

The registrar is fed the frames of a sequence in order and returns, for each,
the homography mapping that frame onto the first one. Three modes exist:

- ``estimate``: keypoints are matched against the previous frame, the step
  homography is estimated with RANSAC and accumulated. If the manifest
  carries homographies, the estimate is cross-checked against them.
- ``from-manifest``: the manifest's homographies are used as they are.
- ``off``: every frame is taken to be registered already.
"""
from dataclasses import dataclass
from typing import Any, Dict, Optional, Sequence

import numpy as np

from .. import config_entry
from ..data.manifest import SequenceManifest
from ..data.stack import ChannelStack
from ..features.encoders import luminance
from ..log import getLogger
from ..utils.misc import ConfigError, LabeledOptions
from .homography import DegeneracyError, Homography, accumulate
from .keypoints import DescribedKeypoints, describe, detect_keypoints, match_descriptors
from .ransac import EstimationError, RansacParams, estimate_homography_ransac

__license__ = 'MIT'

logger = getLogger(__name__)


class RegistrationMode(LabeledOptions):
    estimate = 'estimate'
    from_manifest = 'from-manifest'
    off = 'off'


@dataclass(frozen=True)
class RegistrationConfig:
    """Keypoint and RANSAC settings.

    :param channel: channel that drives registration; ``None`` uses the
        luminance of the RGB planes.
    """
    max_keypoints: int = 500
    ratio: float = 0.8
    ransac: RansacParams = RansacParams()
    channel: Optional[int] = None

    @classmethod
    def from_dict(cls, d: Optional[Dict[str, Any]] = None, seed: int = 0) -> "RegistrationConfig":
        vals = {**(config_entry('registration', default={}) or {}), **(d or {})}
        ch = vals.get('channel')
        ret = cls(max_keypoints=int(vals.get('max_keypoints', 500)),
                  ratio=float(vals.get('ratio', 0.8)),
                  ransac=RansacParams.from_dict(vals, seed=seed),
                  channel=None if ch is None else int(ch))
        if ret.max_keypoints < 4:
            raise ConfigError(f"max_keypoints must be at least 4, got {ret.max_keypoints}.")
        if not 0 <= ret.ratio <= 1:
            raise ConfigError(f"ratio must be in [0, 1], got {ret.ratio}.")
        return ret


@dataclass(frozen=True)
class RegistrationResult:
    """Registration of one frame.

    :param homography: frame -> canonical mapping.
    :param matches: number of descriptor matches with the previous frame.
    :param inliers: number of RANSAC inliers.
    :param discrepancy_px: mean corner distance between the estimate and the
        manifest homography; NaN if there is nothing to compare with.
    """
    homography: Homography
    matches: int = 0
    inliers: int = 0
    discrepancy_px: float = float('nan')


def corner_discrepancy(a: Homography, b: Homography, width: int, height: int) -> float:
    """Mean distance between the images of the frame corners under ``a`` and ``b``."""
    corners = np.array([[0, 0], [width - 1, 0], [0, height - 1], [width - 1, height - 1]],
                       dtype=float)
    return float(np.mean(np.linalg.norm(a.apply(corners) - b.apply(corners), axis=1)))


class Registrar:
    """Registers the frames of one sequence, in order.

    :param mode: registration mode.
    :param cfg: keypoint/RANSAC settings (estimate mode).
    :param manifest_homographies: per-frame homographies from the manifest.
    :param wavelengths: band centers, used to pick the luminance planes.
    """

    def __init__(self, mode: RegistrationMode,
                 cfg: Optional[RegistrationConfig] = None,
                 manifest_homographies: Optional[Sequence[Homography]] = None,
                 wavelengths: Optional[Sequence[float]] = None,
                 rgb_subset: Optional[Sequence[int]] = None):
        if mode is RegistrationMode.from_manifest and manifest_homographies is None:
            raise ConfigError("registration mode 'from-manifest' needs homographies in the manifest.")
        self.mode = mode
        self.cfg = cfg or RegistrationConfig()
        self.manifest_homographies = manifest_homographies
        self.wavelengths = wavelengths
        self.rgb_subset = rgb_subset

        self._position = 0
        self._previous: Optional[DescribedKeypoints] = None
        self._accumulated = Homography.identity()
        self.failures = 0

    @classmethod
    def for_manifest(cls, manifest: SequenceManifest, mode: RegistrationMode,
                     cfg: Optional[RegistrationConfig] = None,
                     rgb_subset: Optional[Sequence[int]] = None) -> "Registrar":
        homs = None
        if manifest.homographies is not None:
            homs = [Homography(h) for h in manifest.homographies]
        return cls(mode, cfg, homs, manifest.wavelengths, rgb_subset)

    def _plane(self, frame: ChannelStack) -> ChannelStack:
        if self.cfg.channel is not None:
            return frame.select([self.cfg.channel])
        return luminance(frame, self.wavelengths, subset=self.rgb_subset)

    def _describe(self, frame: ChannelStack) -> DescribedKeypoints:
        plane = self._plane(frame)
        return describe(plane, detect_keypoints(plane, self.cfg.max_keypoints))

    def register(self, frame: Optional[ChannelStack]) -> RegistrationResult:
        """Register the next frame of the sequence.

        ``frame`` may be ``None`` unless the mode is ``estimate``.
        """
        i = self._position
        self._position += 1
        manifest_h = None
        if self.manifest_homographies is not None and i < len(self.manifest_homographies):
            manifest_h = self.manifest_homographies[i]

        if self.mode is RegistrationMode.off:
            return RegistrationResult(Homography.identity())
        if self.mode is RegistrationMode.from_manifest:
            if manifest_h is None:
                raise ConfigError(f"manifest has no homography for frame position {i}.")
            return RegistrationResult(manifest_h)

        if frame is None:
            raise ConfigError("estimate mode needs the frame pixels.")
        current = self._describe(frame)
        previous, self._previous = self._previous, current
        if previous is None:
            # first frame defines the canonical frame
            return RegistrationResult(self._accumulated)

        matches = match_descriptors(current, previous, self.cfg.ratio)
        ninliers = 0
        try:
            step, mask = estimate_homography_ransac(
                matches, self.cfg.ransac.iterations, self.cfg.ransac.inlier_tol,
                seed=self.cfg.ransac.seed + i)
            ninliers = int(mask.sum())
            self._accumulated = accumulate(self._accumulated, step)
        except (EstimationError, DegeneracyError) as e:
            self.failures += 1
            logger.warning(f"Registration of frame position {i} failed ({e}); "
                           f"keeping the previous alignment.")

        discrepancy = float('nan')
        if manifest_h is not None:
            discrepancy = corner_discrepancy(self._accumulated, manifest_h, frame.width, frame.height)
            if discrepancy > self.cfg.ransac.inlier_tol:
                logger.warning(f"Frame position {i}: estimated registration differs from the "
                               f"manifest by {discrepancy:.2f} px.")
        return RegistrationResult(self._accumulated, len(matches), ninliers, discrepancy)
