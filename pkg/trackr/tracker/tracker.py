"""trackr.tracker.tracker

The multi-ROI tracker: one correlation filter, evaluated on a grid of
overlapping detection windows every frame.

Per frame:

1. the frame is warped to canonical coordinates,
2. a grid of ROIs is laid around the last position,
3. the filter is evaluated on every ROI (optionally on a worker pool),
4. the responses are fused into a new position,
5. unless the tracker coasts, a new filter is trained at the new position and
   blended into the model.
"""
import json
from concurrent.futures import Executor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .. import config_entry
from ..data.stack import ChannelStack, Rect
from ..features.encoders import (
    EmptyProjectionError, FeatureConfig, FeatureKind, hann_window,
)
from ..kcf.correlation import (
    FilterModel, KcfParams, ResponseMap, PSR_EXCLUSION, detect, train, update,
)
from ..log import getLogger
from ..registration.homography import Homography, warp
from ..utils.misc import ConfigError
from .grid import GridConfig, FusionResult, full_roi, fuse, grid_rois
from .sources import FeatureMap, FeatureSource, MappedFeatures, PatchFeatures

__license__ = 'MIT'

logger = getLogger(__name__)

SCHEMA_VERSION = 1

FrameInput = Union[ChannelStack, FeatureMap]


@dataclass(frozen=True)
class TrackerConfig:
    """Everything a :class:`MultiRoiTracker` needs to know.

    :param coasting_limit: a track coasting for more consecutive frames than
        this is reported as lost.
    :param psr_exclusion: edge of the window around the peak excluded from
        the PSR sidelobe, in pixels.
    """
    kcf: KcfParams = field(default_factory=KcfParams)
    grid: GridConfig = field(default_factory=GridConfig)
    features: FeatureConfig = field(default_factory=FeatureConfig)
    coasting_limit: int = 10
    psr_exclusion: int = PSR_EXCLUSION

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        if self.coasting_limit < 0:
            raise ConfigError(f"coasting_limit must be non-negative, got {self.coasting_limit}.")
        if self.psr_exclusion < 1:
            raise ConfigError(f"psr_exclusion must be at least 1, got {self.psr_exclusion}.")
        if self.features.kind is not FeatureKind.deep \
                and self.kcf.cell_size != self.features.cell_size:
            raise ConfigError(
                f"kcf cell_size ({self.kcf.cell_size}) and feature cell_size "
                f"({self.features.cell_size}) differ.")

    @classmethod
    def from_dict(cls, d: Optional[Dict[str, Any]] = None) -> "TrackerConfig":
        """Build from a tracker config document with the optional sections
        ``kcf``, ``grid``, ``features`` and ``tracker``."""
        d = d or {}
        version = d.get('schema_version', SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported tracker config schema_version {version}.")
        features = FeatureConfig.from_dict(d.get('features'))
        kcf_d = dict(d.get('kcf') or {})
        kcf_d.setdefault('cell_size', features.cell_size)
        tr = {**(config_entry('tracker', default={}) or {}), **(d.get('tracker') or {})}
        return cls(
            kcf=KcfParams.from_dict(kcf_d),
            grid=GridConfig.from_dict(d.get('grid')),
            features=features,
            coasting_limit=int(tr.get('coasting_limit', 10)),
            psr_exclusion=int(tr.get('psr_exclusion', PSR_EXCLUSION)),
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            'schema_version': SCHEMA_VERSION,
            'kcf': self.kcf.to_dict(),
            'grid': self.grid.to_dict(),
            'features': self.features.to_dict(),
            'tracker': {'coasting_limit': self.coasting_limit,
                        'psr_exclusion': self.psr_exclusion},
        }


def load_tracker_config(path: str) -> TrackerConfig:
    try:
        with open(path, 'r') as f:
            d = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: not valid JSON ({e})")
    return TrackerConfig.from_dict(d)


@dataclass(frozen=True)
class TrackState:
    """Tracker output for one frame.

    :param center: ``(x, y)`` in canonical pixels.
    :param best_psr: highest PSR over the grid.
    :param coasting: no ROI passed the threshold; position held, no update.
    :param lost: the coasting streak exceeds the configured limit.
    :param roi_psr: PSR of every ROI, in grid order.
    """
    frame: int
    center: Tuple[float, float]
    best_psr: float
    coasting: bool
    lost: bool = False
    roi_psr: Tuple[float, ...] = ()


def _detect_window(model: FilterModel, source: FeatureSource, roi: Rect,
                   params: KcfParams, psr_exclusion: int) -> ResponseMap:
    try:
        z = hann_window(source.window(roi))
    except EmptyProjectionError:
        logger.debug(f"ROI {roi} is outside the feature map.")
        return ResponseMap(values=np.zeros(model.dims), psr=0., peak=(0, 0))
    return detect(model, z, params, psr_exclusion, source.stride)


def detect_grid(model: FilterModel, source: FeatureSource, rois: Sequence[Rect],
                params: KcfParams, executor: Optional[Executor] = None,
                psr_exclusion: int = PSR_EXCLUSION) -> List[ResponseMap]:
    """Evaluate ``model`` on every ROI; responses are in ROI order.

    PSRs are measured on responses upsampled by the source's stride, so
    ``psr_exclusion`` is in pixels.

    :param executor: if given, ROIs are evaluated on its workers.
    """
    def one(roi: Rect) -> ResponseMap:
        return _detect_window(model, source, roi, params, psr_exclusion)

    if executor is None:
        return [one(roi) for roi in rois]
    return list(executor.map(one, rois))


class MultiRoiTracker:
    """Tracks one target with a single filter over a grid of ROIs.

    :param cfg: tracker configuration.
    :param target: id used in log messages.
    :param executor: optional worker pool for per-ROI detection.
    :param wavelengths: band centers of the frames, for band selection.
    """

    def __init__(self, cfg: TrackerConfig, target: str = 'target',
                 executor: Optional[Executor] = None,
                 wavelengths: Optional[Sequence[float]] = None):
        self.cfg = cfg
        self.target = target
        self.executor = executor
        self.wavelengths = wavelengths

        self.model: Optional[FilterModel] = None
        self.center: Tuple[float, float] = (0., 0.)
        self.streak = 0
        self.lost = False

    def _source(self, frame: FrameInput, center: Tuple[float, float]) -> FeatureSource:
        if isinstance(frame, FeatureMap):
            return MappedFeatures(frame)
        if self.cfg.grid.roi_mapping:
            return MappedFeatures.from_patch(frame, full_roi(self.cfg.grid, center),
                                             self.cfg.features, self.wavelengths)
        return PatchFeatures(frame, self.cfg.features, self.wavelengths)

    def _training_features(self, frame: FrameInput, center: Tuple[float, float],
                           detection: Optional[FeatureSource] = None) -> ChannelStack:
        """Features of the training window (``roi_size`` around ``center``).

        With ROI mapping, the window is projected from the detection map if
        that map contains it and reuse is enabled, otherwise from a map of a
        fresh ``full_roi_size`` neighborhood.
        """
        size = self.cfg.grid.roi_size
        troi = Rect.centered(center[0], center[1], size, size)
        grid = self.cfg.grid
        if grid.roi_mapping and not isinstance(frame, FeatureMap) \
                and grid.reuse_training_features \
                and detection is not None and detection.covers(troi):
            return detection.window(troi)
        return self._source(frame, center).window(troi)

    def _train(self, frame: FrameInput, center: Tuple[float, float],
               detection: Optional[FeatureSource] = None) -> FilterModel:
        x = hann_window(self._training_features(frame, center, detection))
        return train(x, self.cfg.kcf)

    def _canonical(self, frame: FrameInput, homography: Optional[Homography]) -> FrameInput:
        if homography is None or isinstance(frame, FeatureMap):
            return frame
        warped, _ = warp(frame, homography)
        return warped

    def initialize(self, frame: FrameInput, center: Tuple[float, float],
                   frame_index: int = 0,
                   homography: Optional[Homography] = None) -> TrackState:
        """Train the first model at ``center`` (canonical pixels)."""
        frame = self._canonical(frame, homography)
        self.center = (float(center[0]), float(center[1]))
        self.model = self._train(frame, self.center)
        self.streak = 0
        self.lost = False
        logger.debug(f"[{self.target}] initialized at {self.center} on frame {frame_index}.")
        return TrackState(frame_index, self.center, 0., False)

    def step(self, frame: FrameInput, frame_index: int,
             homography: Optional[Homography] = None) -> TrackState:
        """Track the target into the next frame."""
        if self.model is None:
            raise RuntimeError("tracker is not initialized.")
        frame = self._canonical(frame, homography)
        grid = self.cfg.grid

        rois = grid_rois(grid, self.center)
        source = self._source(frame, self.center)
        responses = detect_grid(self.model, source, rois, self.cfg.kcf,
                                self.executor, self.cfg.psr_exclusion)
        result: FusionResult = fuse(responses, rois, grid, source.stride, self.center)

        if result.coasting:
            self.streak += 1
            if self.streak > self.cfg.coasting_limit and not self.lost:
                self.lost = True
                logger.warning(f"[{self.target}] lost on frame {frame_index} after "
                               f"{self.streak} frames without a confident ROI.")
        else:
            self.streak = 0
            self.lost = False
            self.center = result.center
            new_model = self._train(frame, self.center, source)
            self.model = update(self.model, new_model, self.cfg.kcf.learning_rate)

        logger.debug(f"[{self.target}] frame {frame_index}: center "
                     f"({self.center[0]:.1f}, {self.center[1]:.1f}), "
                     f"PSR {result.best_psr:.2f}{' (coasting)' if result.coasting else ''}")
        return TrackState(frame_index, self.center, result.best_psr, result.coasting,
                          self.lost, tuple(float(r.psr) for r in responses))
