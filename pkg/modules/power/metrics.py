import math

import numpy as np
from scipy import ndimage

from modules.utils.errors import ConfigError

PEAK = 255.0
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


def _check_pair(reference: np.ndarray, test: np.ndarray):
    reference = np.asarray(reference, dtype=np.float64)
    test = np.asarray(test, dtype=np.float64)
    if reference.shape != test.shape:
        raise ConfigError(f"Images differ in shape: {reference.shape} vs {test.shape}")
    return reference, test


def psnr(reference: np.ndarray, test: np.ndarray) -> float:
    """10 log10(255^2 / MSE) on 8-bit grids; identical images give +inf."""
    reference, test = _check_pair(reference, test)
    mse = float(np.mean((reference - test) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(PEAK * PEAK / mse)


def gaussian_window(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    half = size // 2
    x = np.arange(-half, half + 1, dtype=np.float64)
    g = np.exp(-(x * x) / (2.0 * sigma * sigma))
    window = np.outer(g, g)
    return window / window.sum()


def ssim(reference: np.ndarray, test: np.ndarray) -> float:
    """
    Mean local SSIM over the valid region, 11x11 Gaussian window with
    sigma 1.5, K1 = 0.01, K2 = 0.03, L = 255. Local moments are weighted
    (population) moments under the window.
    """
    reference, test = _check_pair(reference, test)
    if reference.ndim != 2 or min(reference.shape) < SSIM_WINDOW:
        raise ConfigError(f"SSIM needs a 2-D image of at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {reference.shape}")

    window = gaussian_window()
    half = SSIM_WINDOW // 2
    valid = (slice(half, reference.shape[0] - half), slice(half, reference.shape[1] - half))

    def local_mean(grid):
        return ndimage.correlate(grid, window, mode="constant", cval=0.0)[valid]

    mu_x = local_mean(reference)
    mu_y = local_mean(test)
    var_x = local_mean(reference * reference) - mu_x * mu_x
    var_y = local_mean(test * test) - mu_y * mu_y
    cov_xy = local_mean(reference * test) - mu_x * mu_y

    c1 = (SSIM_K1 * PEAK) ** 2
    c2 = (SSIM_K2 * PEAK) ** 2
    numerator = (2.0 * mu_x * mu_y + c1) * (2.0 * cov_xy + c2)
    denominator = (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2)
    return float(np.mean(numerator / denominator))
