"""trackr.features.encoders

Feature encoders feeding the correlation filter, and helpers that operate on
feature tensors: raw-channel pooling, ROI-to-feature-map projection, Hanning
windowing and RGB band selection from hyperspectral cubes.
"""
from dataclasses import dataclass, asdict
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np

from .. import config_entry
from ..data.stack import ChannelStack, Rect, concat
from ..utils.misc import LabeledOptions, ConfigError
from ..utils.num import round_half_up
from .fhog import FeatureError, extract_fhog

__license__ = 'MIT'

#: band ranges in nm
BLUE_BAND = (450., 495.)
GREEN_BAND = (495., 570.)
RED_BAND = (620., 700.)


class EmptyProjectionError(FeatureError):
    """ROI lies completely outside the feature map."""
    pass


class FeatureKind(LabeledOptions):
    fhog = 'fhog'
    raw = 'raw-channels'
    fhog_raw = 'fhog-plus-raw'
    deep = 'deep-from-file'


class BandSelection(LabeledOptions):
    #: channel nearest to each color's band center
    central = 'central'
    #: mean over each color's band
    average = 'average'


@dataclass(frozen=True)
class FeatureConfig:
    """Feature encoder settings.

    :param kind: which encoder to use.
    :param cell_size: fHoG cell / raw pooling size in pixels.
    :param channel_subset: channels used for raw features and (as R, G, B)
        for band selection; ``None`` uses the defaults.
    :param band_selection: how RGB planes are chosen from a cube.
    """
    kind: FeatureKind = FeatureKind.fhog
    cell_size: int = 4
    channel_subset: Optional[Tuple[int, ...]] = None
    band_selection: BandSelection = BandSelection.central

    def validate(self, channels: Optional[int] = None) -> None:
        if self.cell_size < 1:
            raise ConfigError(f"cell_size must be at least 1, got {self.cell_size}.")
        if self.channel_subset is not None:
            if len(self.channel_subset) == 0:
                raise ConfigError("channel_subset must not be empty.")
            if any(c < 0 for c in self.channel_subset):
                raise ConfigError("channel_subset indices must be non-negative.")
            if channels is not None and max(self.channel_subset) >= channels:
                raise ConfigError(
                    f"channel_subset {list(self.channel_subset)} exceeds the "
                    f"{channels} available channels.")

    @classmethod
    def from_dict(cls, d: Optional[Dict[str, Any]] = None) -> "FeatureConfig":
        """Build from a (partial) dict; missing keys come from the
        ``features`` section of the trackr config."""
        defaults = config_entry('features', default={}) or {}
        vals = {**defaults, **(d or {})}
        subset = vals.get('channel_subset')
        try:
            ret = cls(
                kind=FeatureKind.parse(vals.get('kind', 'fhog')),
                cell_size=int(vals.get('cell_size', 4)),
                channel_subset=None if subset is None else tuple(int(c) for c in subset),
                band_selection=BandSelection.parse(vals.get('band_selection', 'central')),
            )
        except (TypeError, ValueError) as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError(f"invalid feature config: {e}")
        ret.validate()
        return ret

    def to_dict(self) -> Dict[str, Any]:
        ret = asdict(self)
        ret['kind'] = self.kind.label
        ret['band_selection'] = self.band_selection.label
        if self.channel_subset is not None:
            ret['channel_subset'] = list(self.channel_subset)
        return ret


def _check_cells(stack: ChannelStack, cell_size: int) -> None:
    if cell_size < 1:
        raise FeatureError(f"cell_size must be at least 1, got {cell_size}.")
    if stack.height < cell_size or stack.width < cell_size:
        raise FeatureError(
            f"raster of {stack.width}x{stack.height} px is smaller than one {cell_size} px cell.")


def extract_raw(stack: ChannelStack, cell_size: int = 4) -> ChannelStack:
    """Mean-pool every channel over ``cell_size`` cells and subtract the
    per-channel mean. Output grid matches :func:`extract_fhog`."""
    _check_cells(stack, cell_size)
    c = stack.channels
    hc, wc = stack.height // cell_size, stack.width // cell_size
    data = stack.data[:, :hc * cell_size, :wc * cell_size].astype(np.float64)
    pooled = data.reshape(c, hc, cell_size, wc, cell_size).mean(axis=(2, 4))
    pooled -= pooled.mean(axis=(1, 2), keepdims=True)
    return ChannelStack(pooled)


def hann_window(features: ChannelStack) -> ChannelStack:
    """Multiply each channel by the outer product of 1D Hann windows."""
    win = np.outer(np.hanning(features.height), np.hanning(features.width))
    return ChannelStack(features.data * win[np.newaxis])


def projection_cells(stride: int, roi: Rect, map_width: int, map_height: int,
                     origin: Tuple[int, int] = (0, 0)) -> Rect:
    """Cell rectangle covered by a pixel ROI on a feature map.

    Edges are divided by ``stride`` and rounded half up, then clamped to the
    map; the result is at least one cell in each direction.

    :param origin: pixel position of the map's top-left cell.
    :raises EmptyProjectionError: if nothing of the ROI lands on the map.
    """
    def axis(lo: float, hi: float, n: int) -> Tuple[int, int]:
        c0 = round_half_up(lo / stride)
        c1 = round_half_up(hi / stride)
        if c1 <= 0 or c0 >= n:
            raise EmptyProjectionError(
                f"ROI {roi} lies outside the {map_width}x{map_height} feature map "
                f"(stride {stride}, origin {origin}).")
        c0, c1 = max(c0, 0), min(c1, n)
        if c1 <= c0:
            c1 = min(c0 + 1, n)
            c0 = c1 - 1
        return c0, c1

    if stride < 1:
        raise FeatureError(f"stride must be at least 1, got {stride}.")
    x0, x1 = axis(roi.x - origin[0], roi.right - origin[0], map_width)
    y0, y1 = axis(roi.y - origin[1], roi.bottom - origin[1], map_height)
    return Rect(x0, y0, x1 - x0, y1 - y0)


def project_roi(fm: ChannelStack, stride: int, roi: Rect,
                origin: Tuple[int, int] = (0, 0)) -> ChannelStack:
    """Cut the part of feature map ``fm`` that covers pixel ROI ``roi``."""
    cells = projection_cells(stride, roi, fm.width, fm.height, origin)
    return ChannelStack(fm.data[:, cells.y:cells.bottom, cells.x:cells.right])


def default_rgb_indices(channels: int) -> Tuple[int, int, int]:
    """(R, G, B) channel indices used when no wavelengths are known.

    Three-channel input is taken to be an RGB raster already; cubes use the
    channels at 5/6, 1/2 and 1/6 of the spectral range.
    """
    if channels == 1:
        return 0, 0, 0
    if channels == 3:
        return 0, 1, 2
    return (min(int(channels * 5 / 6), channels - 1),
            int(channels / 2),
            int(channels / 6))


def rgb_planes(stack: ChannelStack,
               wavelengths: Optional[Sequence[float]] = None,
               mode: BandSelection = BandSelection.central,
               subset: Optional[Sequence[int]] = None) -> ChannelStack:
    """Select red, green and blue planes from a multi-channel stack.

    With ``wavelengths``, ``central`` picks the channel nearest each band's
    center and ``average`` averages all channels inside the band (falling
    back to the nearest channel for bands the cube does not sample).
    Without wavelengths, ``subset`` (R, G, B) or :func:`default_rgb_indices`
    is used.
    """
    if wavelengths is None:
        idxs = tuple(subset) if subset is not None else default_rgb_indices(stack.channels)
        if len(idxs) != 3:
            raise FeatureError(f"RGB selection needs three channels, got {list(idxs)}.")
        return stack.select(idxs)

    wl = np.asarray(wavelengths, dtype=float)
    if wl.size != stack.channels:
        raise FeatureError(f"{wl.size} wavelengths for {stack.channels} channels.")
    planes = []
    for lo, hi in (RED_BAND, GREEN_BAND, BLUE_BAND):
        nearest = int(np.argmin(np.abs(wl - (lo + hi) / 2.)))
        inside = np.flatnonzero((wl >= lo) & (wl < hi))
        if mode is BandSelection.average and inside.size > 0:
            planes.append(stack.data[inside].mean(axis=0))
        else:
            planes.append(stack.data[nearest])
    return ChannelStack(np.stack(planes))


def luminance(stack: ChannelStack,
              wavelengths: Optional[Sequence[float]] = None,
              mode: BandSelection = BandSelection.central,
              subset: Optional[Sequence[int]] = None) -> ChannelStack:
    """Single-channel intensity: the mean of the RGB planes."""
    if stack.channels == 1:
        return stack
    rgb = rgb_planes(stack, wavelengths, mode, subset)
    return ChannelStack(rgb.data.mean(axis=0, keepdims=True))


def encode(patch: ChannelStack, cfg: FeatureConfig,
           wavelengths: Optional[Sequence[float]] = None) -> ChannelStack:
    """Compute the configured features of an image patch.

    fHoG runs on the luminance of the selected RGB planes; raw features use
    ``cfg.channel_subset`` if given, all channels otherwise.
    """
    if cfg.kind is FeatureKind.deep:
        raise FeatureError("deep features are not computed in-process; load them from FMAP files.")

    parts = []
    if cfg.kind in (FeatureKind.fhog, FeatureKind.fhog_raw):
        lum = luminance(patch, wavelengths, cfg.band_selection,
                        cfg.channel_subset if cfg.channel_subset is not None
                        and len(cfg.channel_subset) == 3 else None)
        parts.append(extract_fhog(lum, cfg.cell_size))
    if cfg.kind in (FeatureKind.raw, FeatureKind.fhog_raw):
        src = patch if cfg.channel_subset is None else patch.select(cfg.channel_subset)
        parts.append(extract_raw(src, cfg.cell_size))
    if len(parts) == 1:
        return parts[0]
    return concat(parts)
