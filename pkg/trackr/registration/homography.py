"""trackr.registration.homography

Planar homographies, their accumulation over time, and warping of frames to
the canonical (first-frame) coordinate system.

Points are ``(x, y)`` pixel coordinates, x along columns.
"""
from typing import Sequence, Tuple, Union

import numpy as np
from scipy import ndimage

from ..data.stack import ChannelStack

__license__ = 'MIT'

MIN_DET = 1e-12
SNAP_TOL = 1e-9


class DegeneracyError(ValueError):
    """Singular or non-normalizable homography."""
    pass


class Homography:
    """3x3 projective transform, normalized so that ``h[2, 2] == 1``.

    :raises DegeneracyError: if the matrix cannot be normalized or is
        (nearly) singular.
    """

    __slots__ = ('_m',)

    def __init__(self, matrix: Union[np.ndarray, Sequence]):
        m = np.array(matrix, dtype=np.float64).reshape(3, 3)
        if not np.all(np.isfinite(m)):
            raise DegeneracyError("homography has non-finite entries.")
        if abs(m[2, 2]) < MIN_DET:
            raise DegeneracyError("homography cannot be normalized, h[2, 2] is 0.")
        m = m / m[2, 2]
        if abs(np.linalg.det(m)) <= MIN_DET:
            raise DegeneracyError(f"homography is singular (det = {np.linalg.det(m):.3g}).")
        m.setflags(write=False)
        self._m = m

    @classmethod
    def identity(cls) -> "Homography":
        return cls(np.eye(3))

    @classmethod
    def translation(cls, tx: float, ty: float) -> "Homography":
        return cls([[1, 0, tx], [0, 1, ty], [0, 0, 1]])

    @classmethod
    def rigid(cls, angle_deg: float, tx: float, ty: float,
              center: Tuple[float, float] = (0., 0.)) -> "Homography":
        """Rotation by ``angle_deg`` about ``center``, then translation."""
        a = np.deg2rad(angle_deg)
        c, s = np.cos(a), np.sin(a)
        cx, cy = center
        return cls([[c, -s, cx - c * cx + s * cy + tx],
                    [s, c, cy - s * cx - c * cy + ty],
                    [0, 0, 1]])

    @property
    def matrix(self) -> np.ndarray:
        return self._m

    def inverse(self) -> "Homography":
        return Homography(np.linalg.inv(self._m))

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Map ``(N, 2)`` points."""
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        ph = np.c_[pts, np.ones(len(pts))] @ self._m.T
        return ph[:, :2] / ph[:, 2:3]

    def is_identity(self, tol: float = 0.) -> bool:
        return bool(np.all(np.abs(self._m - np.eye(3)) <= tol))

    def to_list(self) -> Tuple[float, ...]:
        """Nine floats, row-major."""
        return tuple(float(v) for v in self._m.ravel())

    def __matmul__(self, other: "Homography") -> "Homography":
        return accumulate(self, other)

    def __repr__(self) -> str:
        return f"Homography({np.array2string(self._m, precision=4)})"


def accumulate(prev: Homography, step: Homography) -> Homography:
    """Compose ``prev . step``: if ``step`` maps frame t to frame t-1 and
    ``prev`` maps frame t-1 to the canonical frame, the result maps frame t
    to the canonical frame."""
    return Homography(prev.matrix @ step.matrix)


def warp(frame: ChannelStack, h: Homography) -> Tuple[ChannelStack, np.ndarray]:
    """Resample ``frame`` into canonical coordinates.

    ``h`` maps frame pixels to canonical pixels; every output pixel is
    inverse-mapped and bilinearly interpolated. Output pixels whose source
    lies outside the frame are 0.

    :returns: the warped stack (same size as ``frame``) and a boolean
        ``(height, width)`` validity mask.
    """
    hgt, wid = frame.height, frame.width
    if h.is_identity():
        return frame, np.ones((hgt, wid), dtype=bool)

    ys, xs = np.mgrid[0:hgt, 0:wid].astype(np.float64)
    src = h.inverse().apply(np.c_[xs.ravel(), ys.ravel()])
    rounded = np.round(src)
    snap = np.abs(src - rounded) < SNAP_TOL
    src = np.where(snap, rounded, src)
    sx = src[:, 0].reshape(hgt, wid)
    sy = src[:, 1].reshape(hgt, wid)

    valid = (sx >= 0) & (sx <= wid - 1) & (sy >= 0) & (sy <= hgt - 1)
    out = np.zeros(frame.data.shape, dtype=np.float64)
    coords = np.stack([sy, sx])
    for c in range(frame.channels):
        out[c] = ndimage.map_coordinates(frame.data[c].astype(np.float64), coords,
                                         order=1, mode='nearest')
    out[:, ~valid] = 0.
    return ChannelStack(out), valid
