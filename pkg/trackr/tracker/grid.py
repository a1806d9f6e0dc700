"""trackr.tracker.grid

Detection-window grids and fusion of their responses.

The full detection ROI (``full_roi_size`` pixels, square, centered on the
last known target position) is tiled by ``grid_n`` x ``grid_n`` overlapping
ROIs of ``roi_size`` pixels at a uniform integer stride. One filter is
evaluated on every ROI; the per-ROI responses are fused either by picking the
most confident one (hard) or by a PSR-weighted sum on a shared canvas (soft).
"""
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .. import config_entry
from ..data.stack import Rect
from ..kcf.correlation import ResponseMap
from ..log import getLogger
from ..utils.misc import ConfigError, ContractViolation, LabeledOptions
from ..utils.num import first_argmax2d, round_half_up

__license__ = 'MIT'

logger = getLogger(__name__)


class Fusion(LabeledOptions):
    #: most confident ROI wins
    hard = 'hard'
    #: PSR-weighted sum of all confident ROIs
    soft = 'soft'


@dataclass(frozen=True)
class GridConfig:
    """Geometry of the detection grid and fusion settings.

    :param full_roi_size: edge of the full detection ROI in pixels.
    :param roi_size: edge of a single ROI in pixels.
    :param grid_n: ROIs per axis.
    :param psr_threshold: ROIs with PSR at or below this value are ignored.
    :param fusion: how responses are combined.
    :param reuse_training_features: train on the detection feature map when
        the training window lies inside it.
    :param roi_mapping: compute features once on the full ROI and project
        the ROIs onto that map (deep features always do this).
    """
    full_roi_size: int = 96
    roi_size: int = 48
    grid_n: int = 4
    psr_threshold: float = 7.0
    fusion: Fusion = Fusion.soft
    reuse_training_features: bool = True
    roi_mapping: bool = False

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        if self.roi_size < 1:
            raise ConfigError(f"roi_size must be positive, got {self.roi_size}.")
        if self.roi_size > self.full_roi_size:
            raise ConfigError(
                f"roi_size ({self.roi_size}) exceeds full_roi_size ({self.full_roi_size}).")
        if self.grid_n < 1:
            raise ConfigError(f"grid_n must be at least 1, got {self.grid_n}.")
        if self.grid_n > 1:
            span = self.full_roi_size - self.roi_size
            if span <= 0 or span % (self.grid_n - 1) != 0:
                raise ConfigError(
                    f"{self.grid_n} ROIs of {self.roi_size} px cannot tile a "
                    f"{self.full_roi_size} px ROI at a positive integer stride.")
        if self.psr_threshold < 0:
            raise ConfigError(f"psr_threshold must be non-negative, got {self.psr_threshold}.")

    @property
    def stride(self) -> int:
        """Distance between neighboring ROIs in pixels (0 for a single ROI)."""
        if self.grid_n == 1:
            return 0
        return (self.full_roi_size - self.roi_size) // (self.grid_n - 1)

    @property
    def m(self) -> int:
        """Number of ROIs."""
        return self.grid_n ** 2

    @classmethod
    def from_dict(cls, d: Optional[Dict[str, Any]] = None) -> "GridConfig":
        vals = {**(config_entry('grid', default={}) or {}), **(d or {})}
        try:
            return cls(
                full_roi_size=int(vals.get('full_roi_size', 96)),
                roi_size=int(vals.get('roi_size', 48)),
                grid_n=int(vals.get('grid_n', 4)),
                psr_threshold=float(vals.get('psr_threshold', 7.0)),
                fusion=Fusion.parse(vals.get('fusion', 'soft')),
                reuse_training_features=bool(vals.get('reuse_training_features', True)),
                roi_mapping=bool(vals.get('roi_mapping', False)),
            )
        except (TypeError, ValueError) as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError(f"invalid grid config: {e}")

    def to_dict(self) -> Dict[str, Any]:
        return {
            'full_roi_size': self.full_roi_size,
            'roi_size': self.roi_size,
            'grid_n': self.grid_n,
            'psr_threshold': self.psr_threshold,
            'fusion': self.fusion.label,
            'reuse_training_features': self.reuse_training_features,
            'roi_mapping': self.roi_mapping,
        }


def overlap(cfg: GridConfig) -> float:
    """Fraction of a ROI's edge shared with its neighbor (0 for one ROI)."""
    if cfg.grid_n == 1:
        return 0.
    return max(cfg.roi_size - cfg.stride, 0) / cfg.roi_size


def full_roi(cfg: GridConfig, center: Tuple[float, float]) -> Rect:
    return Rect.centered(center[0], center[1], cfg.full_roi_size, cfg.full_roi_size)


def grid_rois(cfg: GridConfig, center: Tuple[float, float]) -> List[Rect]:
    """ROIs tiling the full ROI around ``center``, listed row-major."""
    if cfg.grid_n == 1:
        return [Rect.centered(center[0], center[1], cfg.roi_size, cfg.roi_size)]
    full = full_roi(cfg, center)
    s = cfg.stride
    return [Rect(full.x + j * s, full.y + i * s, cfg.roi_size, cfg.roi_size)
            for i in range(cfg.grid_n) for j in range(cfg.grid_n)]


@dataclass(frozen=True)
class FusionResult:
    center: Tuple[float, float]
    best_psr: float
    coasting: bool


def peak_position(response: ResponseMap, roi: Rect, cell_size: int) -> Tuple[float, float]:
    """Canonical pixel position of a response's peak: the ROI center moved
    by the signed peak shift."""
    dy, dx = response.shift
    cx, cy = roi.center
    return cx + dx * cell_size, cy + dy * cell_size


def fuse(responses: Sequence[ResponseMap], rois: Sequence[Rect], cfg: GridConfig,
         cell_size: int, previous: Optional[Tuple[float, float]] = None) -> FusionResult:
    """Combine per-ROI responses into one position estimate.

    Hard fusion takes the peak of the ROI with the highest PSR. Soft fusion
    weights each response by its PSR (0 for PSR <= threshold), adds the
    centered responses onto a canvas at the ROIs' cell offsets, in ROI order,
    and takes the canvas maximum.

    If no ROI passes the threshold the tracker coasts: the result is
    ``previous`` (by default the center of the ROIs' bounding box).

    :raises ContractViolation: if the lists are empty or misaligned.
    """
    if len(responses) == 0:
        raise ContractViolation("no responses to fuse.")
    if len(responses) != len(rois):
        raise ContractViolation(f"{len(responses)} responses for {len(rois)} ROIs.")
    if previous is None:
        x0, y0 = min(r.x for r in rois), min(r.y for r in rois)
        x1, y1 = max(r.right for r in rois), max(r.bottom for r in rois)
        previous = ((x0 + x1) / 2., (y0 + y1) / 2.)

    psrs = np.array([r.psr for r in responses])
    best = int(np.argmax(psrs))
    best_psr = float(psrs[best])
    passing = psrs > cfg.psr_threshold
    if not np.any(passing):
        return FusionResult(previous, best_psr, True)

    if cfg.fusion is Fusion.hard:
        return FusionResult(peak_position(responses[best], rois[best], cell_size), best_psr, False)

    x0, y0 = min(r.x for r in rois), min(r.y for r in rois)
    offsets = [(round_half_up((r.y - y0) / cell_size), round_half_up((r.x - x0) / cell_size))
               for r in rois]
    h = max(oy + resp.values.shape[0] for (oy, _), resp in zip(offsets, responses))
    w = max(ox + resp.values.shape[1] for (_, ox), resp in zip(offsets, responses))
    canvas = np.zeros((h, w))
    covered = np.zeros((h, w), dtype=bool)
    for (oy, ox), resp, ok in zip(offsets, responses, passing):
        if not ok:
            continue
        rh, rw = resp.values.shape
        canvas[oy:oy + rh, ox:ox + rw] += resp.psr * resp.centered()
        covered[oy:oy + rh, ox:ox + rw] = True
    canvas[~covered] = -np.inf
    row, col = first_argmax2d(canvas)

    rh, rw = responses[0].values.shape
    roi = rois[0]
    x = x0 + col * cell_size + roi.w / 2. - (rw // 2) * cell_size
    y = y0 + row * cell_size + roi.h / 2. - (rh // 2) * cell_size
    return FusionResult((x, y), best_psr, False)
