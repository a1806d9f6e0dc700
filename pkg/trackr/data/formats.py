"""trackr.data.formats

Binary containers for frames and externally produced feature maps.

HSIF (multi-channel frame)
==========================

All fields little-endian::

    offset  size  field
    0       4     magic b'HSIF'
    4       2     version (u16, = 1)
    6       4     width (u32)
    10      4     height (u32)
    14      4     channels (u32)
    18      1     dtype (u8, 0 = float32)
    19      ...   channel-major float32 planes, each plane row-major

FMAP (feature map)
==================

Same layout with magic b'FMAP', and a u16 ``stride`` (input pixels per feature
cell) at offset 18 instead of the dtype byte; data starts at offset 20 and is
always float32.

8-bit grayscale or RGB rasters (PNG, PGM, ...) are read through Pillow and
scaled by 1/255.
"""
import os
import struct
from typing import Optional, Tuple

import numpy as np
from PIL import Image, UnidentifiedImageError

from .stack import ChannelStack

__license__ = 'MIT'

HSIF_MAGIC = b'HSIF'
FMAP_MAGIC = b'FMAP'
FORMAT_VERSION = 1
DTYPE_F32 = 0

HSIF_HEADER = struct.Struct('<4sHIIIB')
FMAP_HEADER = struct.Struct('<4sHIIIH')

_OFFSET_VERSION = 4
_OFFSET_WIDTH = 6
_OFFSET_HEIGHT = 10
_OFFSET_CHANNELS = 14
_OFFSET_TAIL = 18


class FormatError(ValueError):
    """Corrupt or unsupported file content.

    :param offset: byte offset of the offending field, if known.
    """

    def __init__(self, msg: str, offset: Optional[int] = None, path: Optional[str] = None):
        self.offset = offset
        self.path = path
        prefix = f"{path}: " if path is not None else ''
        suffix = f" (at byte {offset})" if offset is not None else ''
        super().__init__(f"{prefix}{msg}{suffix}")


class SizeMismatchError(FormatError):
    """Payload length does not match the size declared in the header."""
    pass


def _read_bytes(path: str) -> bytes:
    with open(path, 'rb') as f:
        return f.read()


def _check_geometry(path: str, width: int, height: int, channels: int) -> None:
    if width == 0:
        raise FormatError("width is 0", _OFFSET_WIDTH, path)
    if height == 0:
        raise FormatError("height is 0", _OFFSET_HEIGHT, path)
    if channels == 0:
        raise FormatError("channel count is 0", _OFFSET_CHANNELS, path)


def _planes(path: str, raw: bytes, header_size: int,
            width: int, height: int, channels: int) -> ChannelStack:
    expected = width * height * channels * 4
    payload = len(raw) - header_size
    if payload != expected:
        raise SizeMismatchError(
            f"header declares {width}x{height}x{channels} float32 values "
            f"({expected} bytes) but the payload has {payload} bytes",
            header_size, path)
    values = np.frombuffer(raw, dtype='<f4', offset=header_size)
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size > 0:
        raise FormatError("non-finite value", header_size + 4 * int(bad[0]), path)
    return ChannelStack(values.reshape(channels, height, width))


def _check_writable(stack: ChannelStack) -> np.ndarray:
    data = np.ascontiguousarray(stack.data, dtype='<f4')
    if not np.all(np.isfinite(data)):
        raise FormatError("refusing to write non-finite values")
    return data


def read_hsif(path: str) -> ChannelStack:
    raw = _read_bytes(path)
    if len(raw) < HSIF_HEADER.size:
        raise FormatError("header truncated", len(raw), path)
    magic, version, width, height, channels, dtype = HSIF_HEADER.unpack_from(raw)
    if magic != HSIF_MAGIC:
        raise FormatError(f"bad magic {magic!r}", 0, path)
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported version {version}", _OFFSET_VERSION, path)
    _check_geometry(path, width, height, channels)
    if dtype != DTYPE_F32:
        raise FormatError(f"unsupported dtype code {dtype}", _OFFSET_TAIL, path)
    return _planes(path, raw, HSIF_HEADER.size, width, height, channels)


def read_raster(path: str) -> ChannelStack:
    """Read an 8-bit grayscale or RGB raster, values scaled to [0, 1]."""
    try:
        with Image.open(path) as img:
            if img.mode in ('1', 'L'):
                arr = np.asarray(img.convert('L'), dtype=np.float32)[np.newaxis]
            elif img.mode in ('RGB', 'RGBA', 'P', 'LA'):
                arr = np.moveaxis(np.asarray(img.convert('RGB'), dtype=np.float32), -1, 0)
            else:
                raise FormatError(f"unsupported raster mode '{img.mode}'", 0, path)
    except (UnidentifiedImageError, OSError) as e:
        raise FormatError(f"neither HSIF nor a readable raster ({e})", 0, path)
    return ChannelStack(arr / 255.)


def load_frame(path: str) -> ChannelStack:
    """Load a frame from an HSIF container or an 8-bit raster.

    :raises FormatError: corrupt header; ``offset`` names the byte.
    :raises SizeMismatchError: truncated or oversized payload.
    """
    with open(path, 'rb') as f:
        head = f.read(4)
    if head == HSIF_MAGIC:
        return read_hsif(path)
    if len(head) < 4:
        raise FormatError("file too short", len(head), path)
    return read_raster(path)


def save_frame(path: str, stack: ChannelStack) -> None:
    """Write ``stack`` as HSIF."""
    data = _check_writable(stack)
    header = HSIF_HEADER.pack(HSIF_MAGIC, FORMAT_VERSION, stack.width,
                              stack.height, stack.channels, DTYPE_F32)
    folder = os.path.dirname(path)
    if folder != '':
        os.makedirs(folder, exist_ok=True)
    with open(path, 'wb') as f:
        f.write(header)
        f.write(data.tobytes())


def load_feature_map(path: str) -> Tuple[ChannelStack, int]:
    """Load an FMAP container.

    :returns: the feature tensor and its stride in input pixels per cell.
    """
    raw = _read_bytes(path)
    if len(raw) < FMAP_HEADER.size:
        raise FormatError("header truncated", len(raw), path)
    magic, version, width, height, channels, stride = FMAP_HEADER.unpack_from(raw)
    if magic != FMAP_MAGIC:
        raise FormatError(f"bad magic {magic!r}", 0, path)
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported version {version}", _OFFSET_VERSION, path)
    _check_geometry(path, width, height, channels)
    if stride == 0:
        raise FormatError("stride is 0", _OFFSET_TAIL, path)
    return _planes(path, raw, FMAP_HEADER.size, width, height, channels), int(stride)


def save_feature_map(path: str, stack: ChannelStack, stride: int) -> None:
    if not 1 <= stride <= 0xFFFF:
        raise FormatError(f"stride {stride} not representable")
    data = _check_writable(stack)
    header = FMAP_HEADER.pack(FMAP_MAGIC, FORMAT_VERSION, stack.width,
                              stack.height, stack.channels, stride)
    folder = os.path.dirname(path)
    if folder != '':
        os.makedirs(folder, exist_ok=True)
    with open(path, 'wb') as f:
        f.write(header)
        f.write(data.tobytes())
