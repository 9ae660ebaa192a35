"""
Threshold ternarization of kernel weights and their mapping onto memristor
conductances.
"""

from typing import NamedTuple, Optional, Union

import numpy as np

from modules.quantize.kernels import Kernel
from modules.seconv.data_classes import DeviceParams, Precision, WeightMode
from modules.utils.errors import ConfigError

THETA_SCALE = 0.75


class ConductancePairs(NamedTuple):
    """Programmed conductances (siemens) of a kernel, shape (s, s) each.

    In single-device mode ``g_minus`` is all zeros: there is no second column.
    """
    g_plus: np.ndarray
    g_minus: np.ndarray
    mode: WeightMode = WeightMode.DIFFERENTIAL

    @property
    def size(self) -> int:
        return self.g_plus.shape[0]

    def flat(self):
        return self.g_plus.ravel(), self.g_minus.ravel()


def _as_weights(weights: Union[Kernel, np.ndarray]) -> np.ndarray:
    if isinstance(weights, Kernel):
        return weights.array
    return np.asarray(weights, dtype=np.float64)


def threshold(weights: Union[Kernel, np.ndarray]) -> float:
    w = _as_weights(weights)
    if w.size == 0:
        raise ValueError("Cannot threshold an empty kernel")
    return THETA_SCALE * float(np.mean(np.abs(w)))


def ternarize_weights(weights: Union[Kernel, np.ndarray]) -> np.ndarray:
    """
    +1 above theta, -1 below -theta, 0 otherwise.

    |W| == theta maps to 0, and an all-zero kernel (theta == 0) maps to zeros.
    """
    w = _as_weights(weights)
    theta = threshold(w)
    ternary = np.zeros_like(w)
    ternary[w > theta] = 1.0
    ternary[w < -theta] = -1.0
    return ternary


def ternarize(kernel: Kernel) -> Kernel:
    return Kernel.from_array(ternarize_weights(kernel), Precision.TERNARY)


def map_conductance(kernel: Kernel,
                    device: Optional[DeviceParams] = None,
                    mode: WeightMode = WeightMode.DIFFERENTIAL) -> ConductancePairs:
    """
    Differential: +1 -> (G_ON, G_OFF), 0 -> (G_OFF, G_OFF), -1 -> (G_OFF, G_ON).
    Single: +1 -> G_ON, 0 -> G_OFF; negative weights cannot be represented.
    """
    if not kernel.is_ternary:
        raise ConfigError("Only ternary kernels can be mapped onto conductances; ternarize first")
    device = device or DeviceParams()
    w = kernel.array
    g_on, g_off = device.g_on, device.g_off
    mode = WeightMode(mode)

    if mode == WeightMode.SINGLE:
        if (w < 0).any():
            raise ConfigError("Single-memristor mode needs a non-negative kernel")
        g_plus = np.where(w > 0, g_on, g_off)
        return ConductancePairs(g_plus, np.zeros_like(g_plus), mode)

    g_plus = np.where(w > 0, g_on, g_off)
    g_minus = np.where(w < 0, g_on, g_off)
    return ConductancePairs(g_plus, g_minus, mode)


def recover_weights(pairs: ConductancePairs, device: Optional[DeviceParams] = None) -> Kernel:
    """Inverse of map_conductance: the sign of g_plus - g_minus (single mode: G_ON is 1)."""
    if WeightMode(pairs.mode) == WeightMode.SINGLE:
        device = device or DeviceParams()
        midpoint = 0.5 * (device.g_on + device.g_off)
        weights = (pairs.g_plus > midpoint).astype(np.float64)
    else:
        weights = np.sign(pairs.g_plus - pairs.g_minus)
    return Kernel.from_array(weights, Precision.TERNARY)


def perturb_pairs(pairs: ConductancePairs, sigma: float, seed: int = 0) -> ConductancePairs:
    """Multiplicative Gaussian programming error, one draw per device, kept positive."""
    if sigma <= 0:
        return pairs
    rng = np.random.default_rng(seed)
    noise_plus = rng.normal(1.0, sigma, pairs.g_plus.shape)
    noise_minus = rng.normal(1.0, sigma, pairs.g_minus.shape)
    floor = 1e-3
    g_plus = pairs.g_plus * np.maximum(noise_plus, floor)
    g_minus = pairs.g_minus * np.maximum(noise_minus, floor)
    return ConductancePairs(g_plus, g_minus, pairs.mode)


def pair_counts(kernel: Kernel, crossbars: int = 2):
    """(pairs with weight +-1, pairs with weight 0) over ``crossbars`` copies of the kernel."""
    nonzero, zero = kernel.counts()
    return crossbars * nonzero, crossbars * zero
