import numpy as np
import pytest

from trackr.data.stack import ChannelStack, Rect
from trackr.features import fhog
from trackr.features.encoders import (
    EmptyProjectionError, FeatureConfig, FeatureKind, encode, extract_raw, hann_window,
    project_roi, projection_cells, rgb_planes,
)
from trackr.utils.misc import ConfigError

from .conftest import textured


def test_fhog_shape():
    """A 48 px patch with 4 px cells gives a 12x12x31 tensor."""
    f = fhog.extract_fhog(textured(48, 48), 4)
    assert f.shape == (12, 12, 31)
    assert np.all(f.data >= 0)
    assert np.any(f.data > 0)

    f = fhog.extract_fhog(textured(50, 41, channels=3), 4)
    assert f.shape == (12, 10, 31)


def test_fhog_flat_image():
    """Without gradients all histograms are empty."""
    f = fhog.extract_fhog(ChannelStack(np.full((1, 16, 16), 0.5)), 4)
    assert np.all(f.data == 0)


def test_fhog_too_small():
    """Images smaller than one cell cannot be encoded."""
    with pytest.raises(fhog.FeatureError):
        fhog.extract_fhog(ChannelStack(np.zeros((1, 3, 3))), 4)
    with pytest.raises(fhog.FeatureError):
        fhog.extract_fhog(textured(8, 8), 0)


def test_raw_channels():
    """Raw features pool to the fHoG grid and have zero mean per channel."""
    cube = textured(48, 48, channels=61)
    f = extract_raw(cube, 4)
    assert f.shape == (12, 12, 61)
    assert np.allclose(f.data.mean(axis=(1, 2)), 0., atol=1e-6)
    expected = cube.data[5, :4, :4].mean() - cube.data[5].mean()
    assert f.data[5, 0, 0] == pytest.approx(expected, abs=1e-5)


def test_encode_kinds():
    """Channel counts of the encoders and their combination."""
    patch = textured(48, 48, channels=3)
    assert encode(patch, FeatureConfig(kind=FeatureKind.fhog)).channels == 31
    assert encode(patch, FeatureConfig(kind=FeatureKind.raw)).channels == 3
    assert encode(patch, FeatureConfig(kind=FeatureKind.fhog_raw)).channels == 34
    assert encode(patch, FeatureConfig(kind=FeatureKind.raw,
                                       channel_subset=(0, 2))).channels == 2
    with pytest.raises(fhog.FeatureError):
        encode(patch, FeatureConfig(kind=FeatureKind.deep))


def test_hann_window():
    """The window vanishes at the borders and keeps the center."""
    f = hann_window(ChannelStack(np.ones((2, 9, 9))))
    assert np.all(f.data[:, 0, :] == 0) and np.all(f.data[:, :, -1] == 0)
    assert f.data[1, 4, 4] == pytest.approx(1.)


def test_projection():
    """ROIs map to cell rectangles, clamped to the map."""
    assert projection_cells(4, Rect(8, 8, 16, 16), 12, 12) == Rect(2, 2, 4, 4)
    assert projection_cells(4, Rect(-4, 0, 8, 8), 12, 12) == Rect(0, 0, 1, 2)
    assert projection_cells(4, Rect(48, 8, 8, 8), 12, 12, origin=(40, 0)) == Rect(2, 2, 2, 2)
    with pytest.raises(EmptyProjectionError):
        projection_cells(4, Rect(-20, -20, 8, 8), 12, 12)

    fm = ChannelStack(np.arange(2 * 12 * 12, dtype=float).reshape(2, 12, 12))
    sub = project_roi(fm, 4, Rect(8, 8, 16, 16))
    assert np.array_equal(sub.data, fm.data[:, 2:6, 2:6])


def test_rgb_planes():
    """Band selection from wavelengths, or fixed fallback indices."""
    cube = textured(8, 8, channels=61)
    wl = 400. + 10. * np.arange(61)
    rgb = rgb_planes(cube, wl)
    assert np.array_equal(rgb.data, cube.data[[26, 13, 7]])
    assert np.array_equal(rgb_planes(cube).data, cube.data[[50, 30, 10]])
    assert np.array_equal(rgb_planes(cube, subset=(3, 2, 1)).data, cube.data[[3, 2, 1]])
    with pytest.raises(fhog.FeatureError):
        rgb_planes(cube, wl[:10])


def test_feature_config():
    """Parsing and validation of the features section."""
    cfg = FeatureConfig.from_dict(dict(kind='raw-channels', channel_subset=[1, 2]))
    assert cfg.kind is FeatureKind.raw and cfg.channel_subset == (1, 2)
    assert FeatureConfig.from_dict(cfg.to_dict()) == cfg

    with pytest.raises(ConfigError):
        FeatureConfig.from_dict(dict(kind='sift'))
    with pytest.raises(ConfigError):
        FeatureConfig.from_dict(dict(cell_size=0))
    with pytest.raises(ConfigError):
        FeatureConfig.from_dict(dict(channel_subset=[]))
    with pytest.raises(ConfigError):
        FeatureConfig(channel_subset=(5,)).validate(channels=3)
