"""trackr.features.fhog

Felzenszwalb's 31-channel histogram of oriented gradients.

Per cell the output holds, in this order:

- 18 contrast-sensitive orientation bins (0..2pi),
- 9 contrast-insensitive bins (0..pi),
- 4 texture-energy channels, one per normalization block.

Gradient magnitudes are binned by orientation and spread bilinearly over the
four nearest cells. Each cell is then normalized by the gradient energy of the
four 2x2 cell blocks it belongs to, clipped at 0.2 and aggregated.
"""
from typing import Tuple

import numpy as np

from ..data.stack import ChannelStack

__license__ = 'MIT'

NUM_ORIENTATIONS = 18
NUM_CHANNELS = 31
CLIP = 0.2
TEXTURE_WEIGHT = 0.2357
EPS = 1e-4


class FeatureError(ValueError):
    """Inputs that do not satisfy a feature encoder's preconditions."""
    pass


def _gradients(img: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Central differences on an edge-padded image. For multiple channels,
    the channel with the largest magnitude wins per pixel."""
    padded = np.pad(img, ((0, 0), (1, 1), (1, 1)), mode='edge')
    dx = padded[:, 1:-1, 2:] - padded[:, 1:-1, :-2]
    dy = padded[:, 2:, 1:-1] - padded[:, :-2, 1:-1]
    mag2 = dx ** 2 + dy ** 2
    if img.shape[0] > 1:
        best = np.argmax(mag2, axis=0)[np.newaxis]
        dx = np.take_along_axis(dx, best, axis=0)
        dy = np.take_along_axis(dy, best, axis=0)
        mag2 = np.take_along_axis(mag2, best, axis=0)
    return dx[0], dy[0], np.sqrt(mag2[0])


def orientation_histograms(img: np.ndarray, cell_size: int) -> np.ndarray:
    """Magnitude-weighted 18-bin orientation histograms per cell.

    :param img: ``(channels, height, width)`` array.
    :returns: ``(height // cell_size, width // cell_size, 18)`` array.
    """
    _, h, w = img.shape
    hc, wc = h // cell_size, w // cell_size
    dx, dy, mag = _gradients(img.astype(np.float64))

    angle = np.mod(np.arctan2(dy, dx), 2 * np.pi)
    bins = np.mod(np.round(angle / (2 * np.pi / NUM_ORIENTATIONS)).astype(int), NUM_ORIENTATIONS)

    yp = (np.arange(h) + 0.5) / cell_size - 0.5
    xp = (np.arange(w) + 0.5) / cell_size - 0.5
    iy0 = np.floor(yp).astype(int)
    ix0 = np.floor(xp).astype(int)
    vy = yp - iy0
    vx = xp - ix0

    hist = np.zeros(hc * wc * NUM_ORIENTATIONS)
    for oy, wy in ((0, 1. - vy), (1, vy)):
        for ox, wx in ((0, 1. - vx), (1, vx)):
            cy = (iy0 + oy)[:, None] * np.ones((1, w), dtype=int)
            cx = np.ones((h, 1), dtype=int) * (ix0 + ox)[None, :]
            weight = wy[:, None] * wx[None, :] * mag
            valid = (cy >= 0) & (cy < hc) & (cx >= 0) & (cx < wc) & (weight > 0)
            flat = (cy[valid] * wc + cx[valid]) * NUM_ORIENTATIONS + bins[valid]
            hist += np.bincount(flat, weights=weight[valid], minlength=hist.size)
    return hist.reshape(hc, wc, NUM_ORIENTATIONS)


def extract_fhog(img: ChannelStack, cell_size: int = 4) -> ChannelStack:
    """Compute fHoG features.

    :param img: single-channel image (multi-channel input uses the dominant
        gradient channel per pixel).
    :param cell_size: cell edge in pixels.
    :returns: stack of shape ``(h // cell_size, w // cell_size, 31)``.
    :raises FeatureError: if the image is smaller than one cell.
    """
    if cell_size < 1:
        raise FeatureError(f"cell_size must be at least 1, got {cell_size}.")
    if img.height < cell_size or img.width < cell_size:
        raise FeatureError(
            f"image of {img.width}x{img.height} px is smaller than one {cell_size} px cell.")

    hist = orientation_histograms(img.data, cell_size)
    hc, wc, _ = hist.shape
    half = NUM_ORIENTATIONS // 2
    insensitive = hist[..., :half] + hist[..., half:]

    energy = np.sum(insensitive ** 2, axis=-1)
    ep = np.pad(energy, 1, mode='edge')
    block = ep[:-1, :-1] + ep[1:, :-1] + ep[:-1, 1:] + ep[1:, 1:]

    out = np.zeros((hc, wc, NUM_CHANNELS))
    for k, (by, bx) in enumerate(((0, 0), (0, 1), (1, 0), (1, 1))):
        norm = 1. / np.sqrt(block[by:by + hc, bx:bx + wc] + EPS)
        sens = np.minimum(hist * norm[..., None], CLIP)
        insens = np.minimum(insensitive * norm[..., None], CLIP)
        out[..., :NUM_ORIENTATIONS] += 0.5 * sens
        out[..., NUM_ORIENTATIONS:NUM_ORIENTATIONS + half] += 0.5 * insens
        out[..., NUM_ORIENTATIONS + half + k] = TEXTURE_WEIGHT * np.sum(sens, axis=-1)

    return ChannelStack.from_hwc(out)
