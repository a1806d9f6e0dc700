"""trackr.data.stack

Core raster types: :class:`ChannelStack`, the multi-channel 2D raster that
carries images and feature maps through the whole package, and
:class:`Rect`, an integer pixel rectangle in canonical-frame coordinates.

A ChannelStack holds its values as 32-bit floats in channel-major layout,
i.e., an array of shape ``(channels, height, width)``. Stacks are immutable;
every operation returns a new stack. Values are guaranteed to be finite.
"""
from dataclasses import dataclass
from typing import Iterable, Sequence, Tuple, Union

import numpy as np

from ..utils.misc import ContractViolation

__license__ = 'MIT'


@dataclass(frozen=True)
class Rect:
    """Integer rectangle; ``x``/``y`` are the left/top edges in pixels."""
    x: int
    y: int
    w: int
    h: int

    def __post_init__(self) -> None:
        for name in ('x', 'y', 'w', 'h'):
            object.__setattr__(self, name, int(getattr(self, name)))
        if self.w <= 0 or self.h <= 0:
            raise ContractViolation(f"Rect needs positive size, got {self.w}x{self.h}.")

    @property
    def right(self) -> int:
        return self.x + self.w

    @property
    def bottom(self) -> int:
        return self.y + self.h

    @property
    def center(self) -> Tuple[float, float]:
        return self.x + self.w / 2., self.y + self.h / 2.

    def contains(self, other: "Rect") -> bool:
        """``True`` if ``other`` lies completely inside this rectangle."""
        return (other.x >= self.x and other.y >= self.y
                and other.right <= self.right and other.bottom <= self.bottom)

    @classmethod
    def centered(cls, cx: float, cy: float, w: int, h: int) -> "Rect":
        """Rectangle of size ``w`` x ``h`` whose center is closest to
        ``(cx, cy)`` on the integer grid."""
        x = int(np.floor(cx - w / 2. + 0.5))
        y = int(np.floor(cy - h / 2. + 0.5))
        return cls(x, y, w, h)


class ChannelStack:
    """Immutable multi-channel raster.

    :param data: array of shape ``(channels, height, width)``, or
        ``(height, width)`` for a single channel. Converted to float32.
    :raises ContractViolation: if the array has the wrong rank, is empty, or
        contains non-finite values.
    """

    __slots__ = ('_data',)

    def __init__(self, data: Union[np.ndarray, Sequence]):
        arr = np.array(data, dtype=np.float32)
        if arr.ndim == 2:
            arr = arr[np.newaxis]
        if arr.ndim != 3:
            raise ContractViolation(f"ChannelStack data needs 2 or 3 dimensions, got {arr.ndim}.")
        if 0 in arr.shape:
            raise ContractViolation(f"ChannelStack cannot be empty, got shape {arr.shape}.")
        if not np.all(np.isfinite(arr)):
            raise ContractViolation("ChannelStack values must be finite.")
        arr.setflags(write=False)
        self._data = arr

    @classmethod
    def from_hwc(cls, data: np.ndarray) -> "ChannelStack":
        """Build from a channel-last ``(height, width, channels)`` array."""
        return cls(np.moveaxis(np.asarray(data), -1, 0))

    @property
    def data(self) -> np.ndarray:
        """Read-only ``(channels, height, width)`` float32 view."""
        return self._data

    @property
    def width(self) -> int:
        return int(self._data.shape[2])

    @property
    def height(self) -> int:
        return int(self._data.shape[1])

    @property
    def channels(self) -> int:
        return int(self._data.shape[0])

    @property
    def shape(self) -> Tuple[int, int, int]:
        """``(height, width, channels)``, the order used when talking about
        feature tensors."""
        return self.height, self.width, self.channels

    def hwc(self) -> np.ndarray:
        return np.moveaxis(self._data, 0, -1)

    def plane(self, channel: int) -> np.ndarray:
        return self._data[channel]

    def select(self, channels: Iterable[int]) -> "ChannelStack":
        idxs = list(channels)
        for c in idxs:
            if c < 0 or c >= self.channels:
                raise ContractViolation(f"Channel {c} out of range for a {self.channels}-channel stack.")
        return ChannelStack(self._data[idxs])

    def same_geometry(self, other: "ChannelStack") -> bool:
        return self._data.shape == other._data.shape

    def identical(self, other: "ChannelStack") -> bool:
        """Bitwise equality of geometry and values."""
        return self.same_geometry(other) and \
            self._data.tobytes() == other._data.tobytes()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ChannelStack):
            return NotImplemented
        return self.identical(other)

    def __hash__(self) -> int:
        return hash((self._data.shape, self._data.tobytes()))

    def __repr__(self) -> str:
        return f"ChannelStack({self.width}x{self.height}x{self.channels})"


def concat(stacks: Sequence[ChannelStack]) -> ChannelStack:
    """Stack channels of rasters with identical spatial size."""
    if len(stacks) == 0:
        raise ContractViolation("Nothing to concatenate.")
    hw = {(s.height, s.width) for s in stacks}
    if len(hw) > 1:
        raise ContractViolation(f"Cannot concatenate stacks of different sizes: {sorted(hw)}.")
    return ChannelStack(np.concatenate([s.data for s in stacks], axis=0))


def crop(stack: ChannelStack, roi: Rect) -> ChannelStack:
    """Cut ``roi`` out of ``stack``, replicating edge pixels where the ROI
    exceeds the raster."""
    rows = np.clip(np.arange(roi.y, roi.bottom), 0, stack.height - 1)
    cols = np.clip(np.arange(roi.x, roi.right), 0, stack.width - 1)
    return ChannelStack(stack.data[:, rows[:, None], cols[None, :]])


def full_rect(stack: ChannelStack) -> Rect:
    return Rect(0, 0, stack.width, stack.height)
