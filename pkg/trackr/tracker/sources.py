"""trackr.tracker.sources

Where the tracker gets the features of a pixel window from.

- :class:`PatchFeatures` crops the window from the frame and encodes it.
- :class:`MappedFeatures` cuts the window out of a feature map that was
  computed once for a larger region (the full detection ROI, or the whole
  frame for externally computed deep features).
"""
import os
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

from ..data.formats import load_feature_map
from ..data.stack import ChannelStack, Rect, crop
from ..features.encoders import FeatureConfig, encode, projection_cells
from ..utils.num import round_half_up

__license__ = 'MIT'

FEATURE_MAP_PATTERN = 'frame_{index:06d}.fmap'


class IngestionError(RuntimeError):
    """Input data the pipeline needs is missing."""
    pass


@dataclass(frozen=True, eq=False)
class FeatureMap:
    """Feature tensor with its stride and the pixel position of its first cell."""
    features: ChannelStack
    stride: int
    origin: Tuple[int, int] = (0, 0)


def feature_map_path(feature_dir: str, index: int) -> str:
    return os.path.join(feature_dir, FEATURE_MAP_PATTERN.format(index=index))


def load_frame_features(feature_dir: str, index: int) -> FeatureMap:
    """Load the deep feature map of frame ``index``.

    :raises IngestionError: if the file does not exist.
    """
    path = feature_map_path(feature_dir, index)
    if not os.path.exists(path):
        raise IngestionError(f"missing feature map for frame {index}: {path}")
    fm, stride = load_feature_map(path)
    return FeatureMap(fm, stride)


class FeatureSource(ABC):
    """Features of pixel windows, at ``stride`` pixels per cell."""

    stride: int

    @abstractmethod
    def window(self, roi: Rect) -> ChannelStack:
        ...

    def covers(self, roi: Rect) -> bool:
        """Whether windows inside ``roi`` come from data this source holds
        already."""
        return False


class PatchFeatures(FeatureSource):

    def __init__(self, frame: ChannelStack, cfg: FeatureConfig,
                 wavelengths: Optional[Sequence[float]] = None):
        self.frame = frame
        self.cfg = cfg
        self.wavelengths = wavelengths
        self.stride = cfg.cell_size

    def window(self, roi: Rect) -> ChannelStack:
        return encode(crop(self.frame, roi), self.cfg, self.wavelengths)


class MappedFeatures(FeatureSource):
    """Windows projected onto a precomputed map.

    Window size in cells is the ROI size divided by the stride, rounded half
    up; cells beyond the map replicate its edge.
    """

    def __init__(self, fmap: FeatureMap):
        self.fmap = fmap
        self.stride = fmap.stride

    @classmethod
    def from_patch(cls, frame: ChannelStack, region: Rect, cfg: FeatureConfig,
                   wavelengths: Optional[Sequence[float]] = None) -> "MappedFeatures":
        """Encode ``region`` of ``frame`` once."""
        features = encode(crop(frame, region), cfg, wavelengths)
        return cls(FeatureMap(features, cfg.cell_size, (region.x, region.y)))

    @property
    def region(self) -> Rect:
        fm = self.fmap
        return Rect(fm.origin[0], fm.origin[1],
                    fm.features.width * fm.stride, fm.features.height * fm.stride)

    def covers(self, roi: Rect) -> bool:
        return self.region.contains(roi)

    def window(self, roi: Rect) -> ChannelStack:
        fm = self.fmap
        # raises if the ROI misses the map entirely
        projection_cells(fm.stride, roi, fm.features.width, fm.features.height, fm.origin)
        x0 = round_half_up((roi.x - fm.origin[0]) / fm.stride)
        y0 = round_half_up((roi.y - fm.origin[1]) / fm.stride)
        w = max(round_half_up(roi.w / fm.stride), 1)
        h = max(round_half_up(roi.h / fm.stride), 1)
        return crop(fm.features, Rect(x0, y0, w, h))
