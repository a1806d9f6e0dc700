import numpy as np
import pytest

from trackr.data.stack import ChannelStack, Rect, concat, crop, full_rect
from trackr.utils.misc import ContractViolation


def test_stack_basics():
    """Check layout conversion, geometry and immutability."""
    hwc = np.arange(4 * 5 * 3, dtype=float).reshape(4, 5, 3)
    s = ChannelStack.from_hwc(hwc)
    assert s.shape == (4, 5, 3)
    assert (s.width, s.height, s.channels) == (5, 4, 3)
    assert s.data.dtype == np.float32
    assert np.array_equal(s.hwc(), hwc)
    assert np.array_equal(s.plane(1), hwc[..., 1])
    with pytest.raises(ValueError):
        s.data[0, 0, 0] = 1.

    single = ChannelStack(np.zeros((3, 2)))
    assert single.shape == (3, 2, 1)


def test_stack_rejects_bad_data():
    """Non-finite values, empty arrays and wrong ranks are refused."""
    with pytest.raises(ContractViolation):
        ChannelStack(np.array([[np.nan, 0.]]))
    with pytest.raises(ContractViolation):
        ChannelStack(np.zeros((0, 4, 4)))
    with pytest.raises(ContractViolation):
        ChannelStack(np.zeros(4))


def test_stack_equality():
    """Equality is bitwise."""
    a = ChannelStack(np.ones((2, 3, 3)))
    b = ChannelStack(np.ones((2, 3, 3)))
    assert a == b and hash(a) == hash(b)
    assert a != ChannelStack(np.ones((2, 3, 3)) * 1.0001)
    assert a != ChannelStack(np.ones((1, 3, 3)))


def test_select_and_concat():
    """Channel selection and concatenation."""
    s = ChannelStack(np.arange(3 * 2 * 2).reshape(3, 2, 2))
    assert np.array_equal(s.select([2, 0]).data, s.data[[2, 0]])
    with pytest.raises(ContractViolation):
        s.select([3])
    c = concat([s, s.select([1])])
    assert c.channels == 4
    with pytest.raises(ContractViolation):
        concat([s, ChannelStack(np.zeros((1, 3, 3)))])


def test_rect():
    """Rectangle geometry."""
    r = Rect(2, 3, 10, 4)
    assert (r.right, r.bottom) == (12, 7)
    assert r.center == (7., 5.)
    assert r.contains(Rect(2, 3, 10, 4))
    assert not r.contains(Rect(1, 3, 10, 4))
    with pytest.raises(ContractViolation):
        Rect(0, 0, 0, 4)


def test_rect_centered():
    """Centered rectangles round half up."""
    assert Rect.centered(10., 10., 4, 4) == Rect(8, 8, 4, 4)
    assert Rect.centered(10.5, 10.5, 4, 4).x == 9
    assert Rect.centered(10., 10., 5, 5).center == (10.5, 10.5)


def test_crop_replicates_edges():
    """Crops beyond the raster repeat its border pixels."""
    s = ChannelStack(np.arange(16).reshape(4, 4))
    inner = crop(s, Rect(1, 1, 2, 2))
    assert np.array_equal(inner.data[0], [[5, 6], [9, 10]])

    outer = crop(s, Rect(-2, 2, 4, 3))
    assert outer.shape == (3, 4, 1)
    assert np.array_equal(outer.data[0, 0], [8, 8, 8, 9])
    assert np.array_equal(outer.data[0, 2], [12, 12, 12, 13])

    assert crop(s, full_rect(s)) == s
