from .correlation import (
    Kernel, KcfParams, FilterModel, ResponseMap,
    gaussian_target, kernel_correlation, train, detect, psr, update,
    fft_counter, PSR_EXCLUSION,
)
