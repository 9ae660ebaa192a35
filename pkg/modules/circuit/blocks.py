"""
Node-equation models of the circuit blocks: crossbar/resistor convolution
columns with transimpedance and subtractor stages, the comparator+MOSFET
signal converters, divider, inverter, multiplier and adder.

Every block accepts numpy arrays (windows along the leading axes, taps along
the last axis for the convolution blocks) or scalars, and clamps op-amp
outputs to +-rail. A CircuitMonitor, when given, counts rail and floor events.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from modules.quantize.ternary import ConductancePairs
from modules.seconv.data_classes import CircuitParams, DeviceParams, DivergenceCounters
from modules.utils.errors import CircuitContractError


@dataclass
class CircuitMonitor:
    clamped_nodes: int = 0
    floor_engagements: int = 0
    negative_denominator_windows: int = 0
    zero_denominator_windows: int = 0
    absorbed_denominator_windows: int = 0

    def to_counters(self) -> DivergenceCounters:
        return DivergenceCounters(
            negative_denominator_windows=self.negative_denominator_windows,
            zero_denominator_windows=self.zero_denominator_windows,
            clamped_nodes=self.clamped_nodes,
            floor_engagements=self.floor_engagements,
            absorbed_denominator_windows=self.absorbed_denominator_windows,
        )


def _rail(v, config: CircuitParams, monitor: Optional[CircuitMonitor]):
    v = np.asarray(v, dtype=np.float64)
    if monitor is not None:
        monitor.clamped_nodes += int(np.count_nonzero(np.abs(v) > config.rail))
    return np.clip(v, -config.rail, config.rail)


def _column_currents(signals: np.ndarray, g: np.ndarray) -> np.ndarray:
    # taps are accumulated in a fixed order so results never depend on how windows are batched
    current = np.zeros(signals.shape[:-1])
    for i in range(signals.shape[-1]):
        current = current + signals[..., i] * g[i]
    return current


def crossbar_conv(signals,
                  pairs: ConductancePairs,
                  config: Optional[CircuitParams] = None,
                  device: Optional[DeviceParams] = None,
                  monitor: Optional[CircuitMonitor] = None,
                  gain: Optional[float] = None):
    """V_out = clamp(gain * (sum v_i g+_i - sum v_i g-_i))."""
    config = config or CircuitParams()
    device = device or DeviceParams()
    signals = np.asarray(signals, dtype=np.float64)
    g_plus, g_minus = pairs.flat()
    if signals.shape[-1] != g_plus.size:
        raise ValueError(f"Expected {g_plus.size} signals per window, got {signals.shape[-1]}")
    gain = config.resolve_gain(device) if gain is None else gain

    i_plus = _column_currents(signals, g_plus)
    i_minus = _column_currents(signals, g_minus)
    v_plus = gain * i_plus
    v_minus = gain * i_minus
    return _rail(v_plus - v_minus, config, monitor)


def rc_pairs(size: int, device: Optional[DeviceParams] = None) -> ConductancePairs:
    """Resistor pairs of the fixed kernel: R_ON on the positive column, R_OFF on the negative."""
    device = device or DeviceParams()
    return ConductancePairs(np.full((size, size), device.g_on), np.full((size, size), device.g_off))


def rc_fixed_conv(mask_signals,
                  size: int,
                  config: Optional[CircuitParams] = None,
                  device: Optional[DeviceParams] = None,
                  monitor: Optional[CircuitMonitor] = None):
    """All-ones kernel realized with resistor pairs; always a differential structure."""
    config = config or CircuitParams()
    device = device or DeviceParams()
    gain = config.transimpedance_gain or 1.0 / (device.g_on - device.g_off)
    return crossbar_conv(mask_signals, rc_pairs(size, device), config, device, monitor, gain=gain)


def signal_convert_zero2one(v_in, config: Optional[CircuitParams] = None, monitor: Optional[CircuitMonitor] = None):
    """
    Inputs above the reference pass through; the MOSFET pulls everything else
    to 1 V. Residues within ``comparator_absorb`` above the reference count as
    zero and are tallied on the monitor.
    """
    config = config or CircuitParams()
    v_in = np.asarray(v_in, dtype=np.float64)
    limit = config.comparator_ref + config.comparator_absorb
    if monitor is not None:
        monitor.absorbed_denominator_windows += int(np.count_nonzero((v_in > config.comparator_ref) & (v_in <= limit)))
    return np.where(v_in > limit, v_in, 1.0)


def comparator_threshold(v_in, eta: float, absorb: float = 1e-9):
    """1 V when v_in >= eta (MOSFET source grounded), else 0 V."""
    v_in = np.asarray(v_in, dtype=np.float64)
    return np.where(v_in >= eta - absorb, 1.0, 0.0)


def divider(v1, v2, config: Optional[CircuitParams] = None, monitor: Optional[CircuitMonitor] = None):
    config = config or CircuitParams()
    v1 = np.asarray(v1, dtype=np.float64)
    v2 = np.asarray(v2, dtype=np.float64)
    if np.any(v2 <= 0):
        raise CircuitContractError(
            f"Divider denominator must be positive, got min {float(np.min(v2))} V; "
            f"the zero-to-one converter upstream is miswired or its reference is negative"
        )
    if monitor is not None:
        monitor.floor_engagements += int(np.count_nonzero(v2 < config.divider_floor))
    return _rail(v1 / np.maximum(v2, config.divider_floor), config, monitor)


def inverter(v):
    """V_out = -V_in + 1."""
    return 1.0 - np.asarray(v, dtype=np.float64)


def multiplier(a, b, config: Optional[CircuitParams] = None, monitor: Optional[CircuitMonitor] = None):
    config = config or CircuitParams()
    return _rail(np.asarray(a, dtype=np.float64) * np.asarray(b, dtype=np.float64), config, monitor)


def adder(a, b, config: Optional[CircuitParams] = None, monitor: Optional[CircuitMonitor] = None):
    config = config or CircuitParams()
    return _rail(np.asarray(a, dtype=np.float64) + np.asarray(b, dtype=np.float64), config, monitor)
