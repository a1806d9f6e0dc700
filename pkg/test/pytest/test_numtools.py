import numpy as np

from trackr.utils import num


def test_round_half_up():
    """Halves round towards +inf, for scalars and arrays."""
    assert num.round_half_up(0.5) == 1
    assert num.round_half_up(-0.5) == 0
    assert num.round_half_up(2.49) == 2
    assert np.array_equal(num.round_half_up(np.array([-1.5, 0.5, 1.5])), [-1, 1, 2])


def test_signed_shift():
    """Cyclic indices map to signed shifts in fftshift order."""
    assert num.signed_shift(0, 12) == 0
    assert num.signed_shift(5, 12) == 5
    assert num.signed_shift(6, 12) == -6
    assert num.signed_shift(7, 12) == -5
    assert num.signed_shift(11, 12) == -1
    assert num.signed_shift(2, 5) == 2
    assert num.signed_shift(3, 5) == -2


def test_first_argmax():
    """Ties resolve to the first maximum in row-major order."""
    arr = np.zeros((3, 4))
    arr[2, 0] = arr[1, 3] = 5.
    assert num.first_argmax2d(arr) == (1, 3)
    assert num.first_argmax2d(np.ones((2, 2))) == (0, 0)


def test_signed_shift_matches_fftshift():
    """The zero shift lands where fftshift puts it."""
    for n in (5, 6, 11, 12):
        shifted = np.fft.fftshift(np.arange(n))
        assert [num.signed_shift(int(i), n) for i in shifted] == list(range(-(n // 2), (n + 1) // 2))
