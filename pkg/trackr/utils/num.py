"""num.py

Tools for numerical operations.
"""
from typing import Tuple, Union

import numpy as np


def round_half_up(v: Union[float, np.ndarray]) -> Union[int, np.ndarray]:
    """Round to the nearest integer, halves towards +inf (0.5 -> 1, -0.5 -> 0)."""
    ret = np.floor(np.asarray(v, dtype=float) + 0.5)
    if ret.ndim == 0:
        return int(ret)
    return ret.astype(int)


def signed_shift(idx: int, n: int) -> int:
    """Interpret a cyclic index as a signed shift.

    Follows the layout of :func:`numpy.fft.fftshift`: indices from
    ``(n + 1) // 2`` on wrap around to negative shifts, i.e. for ``n = 12``
    index 11 is a shift of -1 and index 6 is -6.
    """
    if idx >= (n + 1) // 2:
        return idx - n
    return idx


def first_argmax2d(arr: np.ndarray) -> Tuple[int, int]:
    """Position of the maximum of a 2d array; ties break to the first
    occurrence in row-major order."""
    flat = int(np.argmax(arr))
    r, c = np.unravel_index(flat, arr.shape)
    return int(r), int(c)
