"""trackr.kcf.correlation

Kernelized correlation filter.

Training solves kernel ridge regression over all cyclic shifts of a feature
patch in the Fourier domain, where the kernel matrix is diagonal::

    alpha_hat = y_hat / (k_hat^{xx} + lambda)

Detection evaluates the regression function at all cyclic shifts of a new
patch at once::

    r = ifft2(k_hat^{xz} * alpha_hat)

Indexing convention: ``k^{xz}[d] = kappa(z, roll(x, d))``, where ``roll``
shifts cyclically by ``d = (rows, cols)`` as :func:`numpy.roll` does. A
response peak at index ``d`` therefore means the content moved by ``d``;
indices from ``(n + 1) // 2`` on are negative shifts, as laid out by
:func:`numpy.fft.fftshift`.
"""
import threading
from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple

import numpy as np
from scipy import ndimage

from .. import config_entry
from ..data.stack import ChannelStack
from ..log import getLogger
from ..utils.misc import ContractViolation, ConfigError, LabeledOptions
from ..utils.num import first_argmax2d, signed_shift

__license__ = 'MIT'

logger = getLogger(__name__)

PSR_EXCLUSION = 11
PSR_MIN_STD = 1e-6


class Kernel(LabeledOptions):
    gaussian = 'gaussian'
    linear = 'linear'


class FftCounter:
    """Thread-safe count of 2D transforms (one per plane)."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._count = 0

    def add(self, n: int) -> None:
        with self._lock:
            self._count += n

    def reset(self) -> None:
        with self._lock:
            self._count = 0

    @property
    def count(self) -> int:
        with self._lock:
            return self._count


fft_counter = FftCounter()


def fft2(a: np.ndarray) -> np.ndarray:
    fft_counter.add(int(np.prod(a.shape[:-2], dtype=int)))
    return np.fft.fft2(a, axes=(-2, -1))


def ifft2(a: np.ndarray) -> np.ndarray:
    fft_counter.add(int(np.prod(a.shape[:-2], dtype=int)))
    return np.fft.ifft2(a, axes=(-2, -1))


@dataclass(frozen=True)
class KcfParams:
    """Correlation filter hyperparameters.

    :param lam: ridge regularizer lambda, > 0.
    :param kernel_sigma: Gaussian kernel bandwidth, > 0.
    :param learning_rate: model interpolation factor beta in [0, 1].
    :param output_sigma_factor: desired response width relative to
        ``sqrt(h * w)`` of the feature grid, > 0; 0.04 of the window is
        0.1 of a target padded by 1.5 on each side.
    :param cell_size: pixels per feature cell.
    :param kernel: kernel function.
    """
    lam: float = 1e-4
    kernel_sigma: float = 0.5
    learning_rate: float = 0.02
    output_sigma_factor: float = 0.04
    cell_size: int = 4
    kernel: Kernel = Kernel.gaussian

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        if not self.lam > 0:
            raise ConfigError(f"lambda must be positive, got {self.lam}.")
        if not self.kernel_sigma > 0:
            raise ConfigError(f"kernel_sigma must be positive, got {self.kernel_sigma}.")
        if not 0 <= self.learning_rate <= 1:
            raise ConfigError(f"learning_rate must be in [0, 1], got {self.learning_rate}.")
        if not self.output_sigma_factor > 0:
            raise ConfigError(
                f"output_sigma_factor must be positive, got {self.output_sigma_factor}.")
        if self.cell_size < 1:
            raise ConfigError(f"cell_size must be at least 1, got {self.cell_size}.")

    @classmethod
    def from_dict(cls, d: Optional[Dict[str, Any]] = None) -> "KcfParams":
        """Build from a (partial) dict with the keys of the ``kcf`` config
        section; missing keys come from the trackr config."""
        vals = {**(config_entry('kcf', default={}) or {}), **(d or {})}
        try:
            return cls(
                lam=float(vals.get('lambda', 1e-4)),
                kernel_sigma=float(vals.get('kernel_sigma', 0.5)),
                learning_rate=float(vals.get('learning_rate', 0.02)),
                output_sigma_factor=float(vals.get('output_sigma_factor', 0.04)),
                cell_size=int(vals.get('cell_size', 4)),
                kernel=Kernel.parse(vals.get('kernel', 'gaussian')),
            )
        except (TypeError, ValueError) as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError(f"invalid kcf parameters: {e}")

    def to_dict(self) -> Dict[str, Any]:
        return {
            'lambda': self.lam,
            'kernel_sigma': self.kernel_sigma,
            'learning_rate': self.learning_rate,
            'output_sigma_factor': self.output_sigma_factor,
            'cell_size': self.cell_size,
            'kernel': self.kernel.label,
        }


@dataclass(frozen=True, eq=False)
class FilterModel:
    """Learned filter: dual coefficients and template, both as spectra.

    :param alpha_hat: ``(h, w)`` complex spectrum of the dual coefficients.
    :param template_hat: ``(channels, h, w)`` complex spectrum of the template.
    """
    alpha_hat: np.ndarray
    template_hat: np.ndarray

    def __post_init__(self) -> None:
        if self.template_hat.ndim != 3 or self.alpha_hat.shape != self.template_hat.shape[1:]:
            raise ContractViolation(
                f"alpha_hat {self.alpha_hat.shape} does not match template {self.template_hat.shape}.")
        for a in (self.alpha_hat, self.template_hat):
            a.setflags(write=False)

    @property
    def dims(self) -> Tuple[int, int]:
        return int(self.alpha_hat.shape[0]), int(self.alpha_hat.shape[1])

    @property
    def channels(self) -> int:
        return int(self.template_hat.shape[0])


@dataclass(frozen=True, eq=False)
class ResponseMap:
    """Correlation response of one detection window.

    :param values: real response at feature-grid resolution, cyclic indexing
        (zero shift at ``(0, 0)``).
    :param psr: peak-to-sidelobe ratio, measured on the response at pixel
        resolution when detection was given the feature stride.
    :param peak: ``(row, col)`` of the maximum of ``values``.
    """
    values: np.ndarray
    psr: float
    peak: Tuple[int, int]

    @property
    def shift(self) -> Tuple[int, int]:
        """Peak as signed ``(rows, cols)`` displacement in cells."""
        h, w = self.values.shape
        return signed_shift(self.peak[0], h), signed_shift(self.peak[1], w)

    def centered(self) -> np.ndarray:
        """Response rearranged so zero shift sits at ``(h // 2, w // 2)``; the
        same layout :attr:`shift` reads peaks in."""
        return np.fft.fftshift(self.values)


def gaussian_target(h: int, w: int, output_sigma: float) -> np.ndarray:
    """Desired response: a Gaussian of peak 1 centered at index ``(0, 0)``
    with cyclic wrap-around."""
    dy = ((np.arange(h) + h // 2) % h) - h // 2
    dx = ((np.arange(w) + w // 2) % w) - w // 2
    return np.exp(-(dy[:, None] ** 2 + dx[None, :] ** 2) / (2. * output_sigma ** 2))


def _as_planes(stack: ChannelStack) -> np.ndarray:
    return stack.data.astype(np.float64)


def _correlate(xf: np.ndarray, zf: np.ndarray, xx: float, zz: float,
               kernel_sigma: float, kernel: Kernel) -> np.ndarray:
    """Spatial kernel correlation from the spectra of x and z."""
    xy = np.real(ifft2(np.sum(zf * np.conj(xf), axis=0)))
    if kernel is Kernel.linear:
        return xy
    n = xf.size
    d2 = np.maximum(xx + zz - 2. * xy, 0.)
    return np.exp(-d2 / (kernel_sigma ** 2 * n))


def _energy(xf: np.ndarray) -> float:
    h, w = xf.shape[-2:]
    return float(np.sum(np.abs(xf) ** 2) / (h * w))


def kernel_correlation(x: ChannelStack, z: ChannelStack, kernel_sigma: float,
                       kernel: Kernel = Kernel.gaussian) -> np.ndarray:
    """Kernel correlation ``k^{xz}`` between ``z`` and all cyclic shifts of ``x``.

    For the Gaussian kernel the squared distance is normalized by the number
    of feature elements, so the bandwidth does not depend on patch size.

    :raises ContractViolation: if the shapes of ``x`` and ``z`` differ.
    """
    if not x.same_geometry(z):
        raise ContractViolation(f"cannot correlate {x} with {z}.")
    xp, zp = _as_planes(x), _as_planes(z)
    xf, zf = fft2(xp), fft2(zp)
    return _correlate(xf, zf, float(np.sum(xp ** 2)), float(np.sum(zp ** 2)),
                      kernel_sigma, kernel)


def train(features: ChannelStack, params: KcfParams) -> FilterModel:
    """Fit a filter to Hanning-windowed features."""
    x = _as_planes(features)
    _, h, w = x.shape
    xf = fft2(x)
    xx = _energy(xf)
    kf = fft2(_correlate(xf, xf, xx, xx, params.kernel_sigma, params.kernel))
    y = gaussian_target(h, w, params.output_sigma_factor * np.sqrt(h * w))
    alpha_hat = fft2(y) / (kf + params.lam)
    return FilterModel(alpha_hat=alpha_hat, template_hat=xf)


def upsample_response(values: np.ndarray, factor: int) -> np.ndarray:
    """Cubic-spline resampling of a cyclic response to ``factor`` times its
    resolution; cell ``(i, j)`` becomes the block starting at
    ``(i * factor, j * factor)``."""
    if factor < 1:
        raise ContractViolation(f"upsampling factor must be at least 1, got {factor}.")
    if factor == 1:
        return np.asarray(values, dtype=np.float64)
    return ndimage.zoom(np.asarray(values, dtype=np.float64), factor, order=3,
                        mode='grid-wrap', grid_mode=True)


def detect(model: FilterModel, z: ChannelStack, params: KcfParams,
           psr_exclusion: int = PSR_EXCLUSION, upsample: int = 1) -> ResponseMap:
    """Evaluate the filter at all cyclic shifts of ``z``.

    The PSR is taken on the response upsampled by ``upsample`` (the feature
    stride, to measure ``psr_exclusion`` in pixels) and rolled so the peak
    sits in the middle; the exclusion window is then never split by the
    wrap-around.
    """
    zp = _as_planes(z)
    if zp.shape != model.template_hat.shape:
        raise ContractViolation(
            f"features of shape {zp.shape} do not match the model {model.template_hat.shape}.")
    zf = fft2(zp)
    kxz = _correlate(model.template_hat, zf, _energy(model.template_hat),
                     float(np.sum(zp ** 2)), params.kernel_sigma, params.kernel)
    values = np.real(ifft2(fft2(kxz) * model.alpha_hat))
    peak = first_argmax2d(values)
    fine = upsample_response(values, upsample)
    pr, pc = first_argmax2d(fine)
    fine = np.roll(fine, (fine.shape[0] // 2 - pr, fine.shape[1] // 2 - pc), axis=(0, 1))
    return ResponseMap(values=values, psr=psr(fine, psr_exclusion), peak=peak)


def psr(response: np.ndarray, exclusion: int = PSR_EXCLUSION) -> float:
    """Peak-to-sidelobe ratio.

    The sidelobe is everything outside an ``exclusion`` x ``exclusion``
    window around the peak (clipped at the borders). Returns 0 if the
    sidelobe is empty.
    """
    r = np.asarray(response, dtype=np.float64)
    pr, pc = first_argmax2d(r)
    half = exclusion // 2
    mask = np.ones(r.shape, dtype=bool)
    mask[max(pr - half, 0):pr + half + 1, max(pc - half, 0):pc + half + 1] = False
    sidelobe = r[mask]
    if sidelobe.size == 0:
        return 0.
    std = max(float(np.std(sidelobe)), PSR_MIN_STD)
    return max((float(r[pr, pc]) - float(np.mean(sidelobe))) / std, 0.)


def update(model: FilterModel, new_model: FilterModel, learning_rate: float) -> FilterModel:
    """Blend ``new_model`` into ``model``: ``(1 - beta) * old + beta * new``."""
    if model.template_hat.shape != new_model.template_hat.shape:
        raise ContractViolation(
            f"cannot blend a {new_model.template_hat.shape} model into "
            f"a {model.template_hat.shape} one.")
    if learning_rate == 0:
        return model
    if learning_rate == 1:
        return new_model
    b = learning_rate
    return FilterModel(
        alpha_hat=(1 - b) * model.alpha_hat + b * new_model.alpha_hat,
        template_hat=(1 - b) * model.template_hat + b * new_model.template_hat,
    )
