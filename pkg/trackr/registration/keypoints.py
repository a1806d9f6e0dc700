"""trackr.registration.keypoints

Harris corners, normalized patch descriptors and mutual nearest-neighbor
matching with a ratio test.
"""
from dataclasses import dataclass
from typing import List, NamedTuple, Tuple

import numpy as np
from scipy import ndimage

from ..data.stack import ChannelStack
from ..log import getLogger

__license__ = 'MIT'

logger = getLogger(__name__)

PATCH_SIZE = 11
NMS_RADIUS = 5
HARRIS_K = 0.04
MIN_IMAGE_SIZE = 16


class Keypoint(NamedTuple):
    x: float
    y: float
    strength: float


@dataclass(frozen=True, eq=False)
class DescribedKeypoints:
    """Keypoint positions ``(N, 2)`` (x, y) and their descriptors ``(N, D)``."""
    points: np.ndarray
    descriptors: np.ndarray

    def __len__(self) -> int:
        return int(self.points.shape[0])


@dataclass(frozen=True)
class Match:
    """Correspondence of point ``p`` in frame A with point ``q`` in frame B."""
    p: Tuple[float, float]
    q: Tuple[float, float]
    score: float


def harris_response(img: np.ndarray, sigma: float = 1.5, k: float = HARRIS_K) -> np.ndarray:
    ix = ndimage.sobel(img, axis=1)
    iy = ndimage.sobel(img, axis=0)
    sxx = ndimage.gaussian_filter(ix * ix, sigma)
    syy = ndimage.gaussian_filter(iy * iy, sigma)
    sxy = ndimage.gaussian_filter(ix * iy, sigma)
    return sxx * syy - sxy ** 2 - k * (sxx + syy) ** 2


def _subpixel(r: np.ndarray, y: int, x: int) -> Tuple[float, float]:
    """Vertex of the parabola through the response and its neighbors."""
    def offset(m: float, c: float, p: float) -> float:
        denom = m - 2 * c + p
        if denom >= 0:
            return 0.
        return float(np.clip(0.5 * (m - p) / denom, -0.5, 0.5))
    return (x + offset(r[y, x - 1], r[y, x], r[y, x + 1]),
            y + offset(r[y - 1, x], r[y, x], r[y + 1, x]))


def detect_keypoints(img: ChannelStack, max_count: int = 500,
                     radius: int = NMS_RADIUS, rel_threshold: float = 0.01) -> List[Keypoint]:
    """Harris corners after non-maximum suppression, strongest first.

    Corners closer to the border than half a descriptor patch are dropped.

    :param img: single-channel image (the first channel is used).
    :param max_count: maximum number of keypoints returned.
    :param radius: suppression radius in pixels.
    :param rel_threshold: minimum response relative to the strongest one.
    """
    plane = img.plane(0).astype(np.float64)
    h, w = plane.shape
    if h < MIN_IMAGE_SIZE or w < MIN_IMAGE_SIZE:
        logger.debug(f"Image of {w}x{h} px too small for keypoints.")
        return []

    r = harris_response(plane)
    rmax = float(r.max())
    if rmax <= 0:
        return []

    local_max = ndimage.maximum_filter(r, size=2 * radius + 1, mode='constant', cval=-np.inf)
    margin = PATCH_SIZE // 2 + 1
    mask = (r == local_max) & (r > rel_threshold * rmax)
    mask[:margin] = False
    mask[-margin:] = False
    mask[:, :margin] = False
    mask[:, -margin:] = False

    ys, xs = np.nonzero(mask)
    strengths = r[ys, xs]
    order = np.lexsort((xs, ys, -strengths))[:max_count]
    ret = []
    for i in order:
        sx, sy = _subpixel(r, int(ys[i]), int(xs[i]))
        ret.append(Keypoint(sx, sy, float(strengths[i])))
    return ret


def describe(img: ChannelStack, keypoints: List[Keypoint],
             size: int = PATCH_SIZE) -> DescribedKeypoints:
    """Zero-mean, unit-norm ``size`` x ``size`` patches around each keypoint.
    Keypoints on flat patches or too close to the border are skipped."""
    plane = img.plane(0).astype(np.float64)
    h, w = plane.shape
    half = size // 2
    pts, descs = [], []
    for kp in keypoints:
        cx, cy = int(np.floor(kp.x + 0.5)), int(np.floor(kp.y + 0.5))
        if cx < half or cy < half or cx + half >= w or cy + half >= h:
            continue
        patch = plane[cy - half:cy + half + 1, cx - half:cx + half + 1].ravel()
        patch = patch - patch.mean()
        norm = np.linalg.norm(patch)
        if norm < 1e-12:
            continue
        pts.append((kp.x, kp.y))
        descs.append(patch / norm)
    return DescribedKeypoints(
        points=np.array(pts, dtype=np.float64).reshape(-1, 2),
        descriptors=np.array(descs, dtype=np.float64).reshape(-1, size * size),
    )


def match_descriptors(a: DescribedKeypoints, b: DescribedKeypoints,
                      ratio: float = 0.8) -> List[Match]:
    """Mutual nearest neighbors whose best/second-best distance ratio is
    below ``ratio``. Results are in the order of ``a``."""
    if len(a) == 0 or len(b) == 0:
        return []
    sim = a.descriptors @ b.descriptors.T
    dist = np.sqrt(np.maximum(2. - 2. * sim, 0.))

    best_b = np.argmin(dist, axis=1)
    best_a = np.argmin(dist, axis=0)
    ret = []
    for i, j in enumerate(best_b):
        if best_a[j] != i:
            continue
        d1 = dist[i, j]
        if len(b) > 1:
            d2 = np.partition(dist[i], 1)[1]
        else:
            d2 = np.inf
        if d2 > 0 and d1 / d2 < ratio:
            ret.append(Match(p=(float(a.points[i, 0]), float(a.points[i, 1])),
                             q=(float(b.points[j, 0]), float(b.points[j, 1])),
                             score=float(d1)))
    return ret
