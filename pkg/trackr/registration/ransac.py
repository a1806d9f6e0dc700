"""trackr.registration.ransac

Robust homography estimation: random 4-point samples solved by the
normalized direct linear transform, scored by consensus, and refit on all
inliers of the best sample.
"""
from dataclasses import dataclass
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np

from .. import config_entry
from ..log import getLogger
from ..utils.misc import ConfigError
from .homography import Homography, DegeneracyError
from .keypoints import Match

__license__ = 'MIT'

logger = getLogger(__name__)

MIN_SAMPLE_AREA = 1e-3


class EstimationError(RuntimeError):
    """No homography could be estimated from the given matches."""
    pass


@dataclass(frozen=True)
class RansacParams:
    iterations: int = 1000
    inlier_tol: float = 2.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.iterations < 1:
            raise ConfigError(f"RANSAC needs at least one iteration, got {self.iterations}.")
        if not self.inlier_tol > 0:
            raise ConfigError(f"inlier tolerance must be positive, got {self.inlier_tol}.")

    @classmethod
    def from_dict(cls, d: Optional[Dict[str, Any]] = None, seed: int = 0) -> "RansacParams":
        vals = {**(config_entry('registration', default={}) or {}), **(d or {})}
        return cls(iterations=int(vals.get('iterations', 1000)),
                   inlier_tol=float(vals.get('inlier_tol', 2.0)),
                   seed=int(vals.get('seed', seed)))


def normalize_points(pts: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Translate to zero mean and scale to mean distance sqrt(2).

    :returns: normalized points and the 3x3 similarity that produced them.
    """
    c = pts.mean(axis=0)
    d = np.sqrt(((pts - c) ** 2).sum(axis=1)).mean() + 1e-12
    s = np.sqrt(2) / d
    t = np.array([[s, 0, -s * c[0]],
                  [0, s, -s * c[1]],
                  [0, 0, 1]], dtype=np.float64)
    return (pts - c) * s, t


def _design_matrix(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    x, y = src[:, 0], src[:, 1]
    u, v = dst[:, 0], dst[:, 1]
    n = len(src)
    zeros, ones = np.zeros(n), np.ones(n)
    a = np.zeros((2 * n, 9))
    a[0::2] = np.c_[x, y, ones, zeros, zeros, zeros, -u * x, -u * y, -u]
    a[1::2] = np.c_[zeros, zeros, zeros, x, y, ones, -v * x, -v * y, -v]
    return a


def dlt(src: np.ndarray, dst: np.ndarray) -> Optional[np.ndarray]:
    """Least-squares homography mapping ``src`` onto ``dst`` (both ``(N, 2)``,
    N >= 4), computed on normalized coordinates. ``None`` if degenerate."""
    src_n, t_src = normalize_points(src)
    dst_n, t_dst = normalize_points(dst)
    a = _design_matrix(src_n, dst_n)
    if np.linalg.matrix_rank(a) < 8:
        return None
    _, _, vt = np.linalg.svd(a)
    hn = vt[-1].reshape(3, 3)
    m = np.linalg.inv(t_dst) @ hn @ t_src
    if abs(m[2, 2]) < 1e-12:
        return None
    return m / m[2, 2]


def _non_collinear(pts: np.ndarray) -> bool:
    """Every triangle of the 4-point sample must have non-vanishing area."""
    pn, _ = normalize_points(pts)
    for i, j, k in ((0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)):
        u, v = pn[j] - pn[i], pn[k] - pn[i]
        if 0.5 * abs(u[0] * v[1] - u[1] * v[0]) < MIN_SAMPLE_AREA:
            return False
    return True


def reprojection_error(m: np.ndarray, src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    ph = np.c_[src, np.ones(len(src))] @ m.T
    w = ph[:, 2:3]
    w = np.where(np.abs(w) < 1e-12, 1e-12, w)
    return np.sqrt(((ph[:, :2] / w - dst) ** 2).sum(axis=1))


def _rms(err: np.ndarray) -> float:
    return float(np.sqrt(np.mean(err ** 2))) if err.size > 0 else 0.


def estimate_homography_ransac(matches: Sequence[Match], iterations: int = 1000,
                               inlier_tol: float = 2.0,
                               seed: int = 0) -> Tuple[Homography, np.ndarray]:
    """Estimate the homography mapping match points ``p`` onto ``q``.

    The sample with the largest consensus (ties broken by lower inlier RMS)
    is refit on all of its inliers. The refit is kept only if it does not
    increase the inlier RMS.

    :returns: the homography and a boolean inlier mask aligned with
        ``matches``; inliers have reprojection error below ``inlier_tol``.
    :raises EstimationError: fewer than 4 matches, or no non-degenerate
        sample was found.
    """
    n = len(matches)
    if n < 4:
        raise EstimationError(f"need at least 4 matches, got {n}.")
    src = np.array([m.p for m in matches], dtype=np.float64)
    dst = np.array([m.q for m in matches], dtype=np.float64)

    rng = np.random.default_rng(seed)
    best: Optional[np.ndarray] = None
    best_count, best_rms = -1, np.inf
    for _ in range(iterations):
        idx = rng.choice(n, size=4, replace=False)
        if not (_non_collinear(src[idx]) and _non_collinear(dst[idx])):
            continue
        m = dlt(src[idx], dst[idx])
        if m is None:
            continue
        err = reprojection_error(m, src, dst)
        inl = err < inlier_tol
        count = int(inl.sum())
        rms = _rms(err[inl])
        if count > best_count or (count == best_count and rms < best_rms):
            best, best_count, best_rms = m, count, rms

    if best is None:
        raise EstimationError(f"all {iterations} RANSAC samples were degenerate.")

    inliers = reprojection_error(best, src, dst) < inlier_tol
    final = best
    if inliers.sum() >= 4:
        refit = dlt(src[inliers], dst[inliers])
        if refit is not None:
            rms_min = _rms(reprojection_error(best, src[inliers], dst[inliers]))
            rms_ref = _rms(reprojection_error(refit, src[inliers], dst[inliers]))
            if rms_ref <= rms_min:
                final = refit
    inliers = reprojection_error(final, src, dst) < inlier_tol

    try:
        hom = Homography(final)
    except DegeneracyError as e:
        raise EstimationError(f"estimated homography is degenerate: {e}")
    logger.debug(f"RANSAC: {int(inliers.sum())}/{n} inliers.")
    return hom, inliers
