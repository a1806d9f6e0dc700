import struct

import numpy as np
import pytest
from PIL import Image

from trackr.data import formats
from trackr.data.formats import FormatError, SizeMismatchError
from trackr.data.stack import ChannelStack


def _hsif(path, width=3, height=2, channels=2, version=1, dtype=0, payload=None):
    if payload is None:
        payload = np.zeros(width * height * channels, dtype='<f4').tobytes()
    with open(path, 'wb') as f:
        f.write(struct.pack('<4sHIIIB', b'HSIF', version, width, height, channels, dtype))
        f.write(payload)
    return str(path)


def test_hsif_storage_and_retrieval(tmp_path):
    """A frame written as HSIF reads back bitwise."""
    s = ChannelStack(np.random.default_rng(0).random((5, 7, 9)))
    fn = str(tmp_path / 'f.hsif')
    formats.save_frame(fn, s)
    assert formats.load_frame(fn) == s
    with open(fn, 'rb') as f:
        head = f.read(19)
    assert head[:4] == b'HSIF'
    assert struct.unpack('<HIIIB', head[4:]) == (1, 9, 7, 5, 0)


def test_hsif_header_errors(tmp_path):
    """Corrupt headers are reported with the offending byte offset."""
    with pytest.raises(FormatError) as e:
        formats.load_frame(_hsif(tmp_path / 'v.hsif', version=2))
    assert e.value.offset == 4

    with pytest.raises(FormatError) as e:
        formats.load_frame(_hsif(tmp_path / 'w.hsif', width=0, payload=b''))
    assert e.value.offset == 6

    with pytest.raises(FormatError) as e:
        formats.load_frame(_hsif(tmp_path / 'c.hsif', channels=0, payload=b''))
    assert e.value.offset == 14

    with pytest.raises(FormatError) as e:
        formats.load_frame(_hsif(tmp_path / 'd.hsif', dtype=3))
    assert e.value.offset == 18

    fn = tmp_path / 't.hsif'
    fn.write_bytes(b'HSIF\x01\x00')
    with pytest.raises(FormatError) as e:
        formats.load_frame(str(fn))
    assert e.value.offset == 6


def test_hsif_payload_errors(tmp_path):
    """Truncated payloads and non-finite values are rejected."""
    with pytest.raises(SizeMismatchError):
        formats.load_frame(_hsif(tmp_path / 's.hsif', payload=b'\x00' * 20))

    values = np.zeros(12, dtype='<f4')
    values[5] = np.inf
    with pytest.raises(FormatError) as e:
        formats.load_frame(_hsif(tmp_path / 'n.hsif', payload=values.tobytes()))
    assert e.value.offset == 19 + 5 * 4


def test_raster_frames(tmp_path):
    """8-bit rasters are scaled to [0, 1]; grayscale has one channel."""
    gray = np.array([[0, 255], [51, 102]], dtype=np.uint8)
    Image.fromarray(gray, mode='L').save(tmp_path / 'g.png')
    s = formats.load_frame(str(tmp_path / 'g.png'))
    assert s.shape == (2, 2, 1)
    assert np.allclose(s.data[0], gray / 255.)

    rgb = np.zeros((3, 4, 3), dtype=np.uint8)
    rgb[..., 1] = 255
    Image.fromarray(rgb, mode='RGB').save(tmp_path / 'c.png')
    s = formats.load_frame(str(tmp_path / 'c.png'))
    assert s.shape == (3, 4, 3)
    assert np.all(s.plane(1) == 1.) and np.all(s.plane(0) == 0.)

    (tmp_path / 'junk.bin').write_bytes(b'not an image at all')
    with pytest.raises(FormatError):
        formats.load_frame(str(tmp_path / 'junk.bin'))


def test_feature_maps(tmp_path):
    """Feature maps keep their stride."""
    fm = ChannelStack(np.random.default_rng(1).normal(size=(31, 12, 12)))
    fn = str(tmp_path / 'f.fmap')
    formats.save_feature_map(fn, fm, 4)
    back, stride = formats.load_feature_map(fn)
    assert back == fm and stride == 4
    with pytest.raises(FormatError):
        formats.save_feature_map(fn, fm, 0)

    with open(fn, 'r+b') as f:
        f.seek(18)
        f.write(b'\x00\x00')
    with pytest.raises(FormatError) as e:
        formats.load_feature_map(fn)
    assert e.value.offset == 18
