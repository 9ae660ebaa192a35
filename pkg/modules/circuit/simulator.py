"""
Window-level and image-level simulation of the MSC and MSCE circuits.

Each output pixel is produced by one copy of the window circuit fed with the
s*s pixel voltages (from A~) and mask voltages (from M~_A) around it. The
copies are independent, so the image is evaluated in row bands that may run
concurrently; every window is computed with the same fixed tap order, so the
result does not depend on the band split.
"""

from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, NamedTuple, Optional, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from modules.circuit.blocks import (CircuitMonitor, crossbar_conv, rc_fixed_conv, signal_convert_zero2one,
                                    comparator_threshold, divider, inverter, multiplier, adder)
from modules.device.memristor import read_is_safe
from modules.image.tensor_ops import nonnoisy_mask
from modules.quantize.kernels import Kernel
from modules.quantize.ternary import ConductancePairs, map_conductance, perturb_pairs
from modules.seconv.data_classes import (CircuitParams, DeviceParams, ModelImpl, StagePlan, StageTrace,
                                         DivergenceCounters, ReliabilityRule)
from modules.seconv.reference import resolve_stage_kernel
from modules.utils.errors import CircuitContractError, ConfigError
from modules.utils.logger import get_logger

logger = get_logger()


class WindowSignals(NamedTuple):
    """Pixel voltages ``v`` and mask voltages ``m``, taps along the last axis."""
    v: np.ndarray
    m: np.ndarray

    @property
    def center(self) -> int:
        # ceil(n / 2) in 1-based numbering
        return self.v.shape[-1] // 2

    def validate(self):
        m = np.asarray(self.m)
        if not np.isin(m, (0.0, 1.0)).all():
            raise CircuitContractError("Mask voltages must be 0 V or 1 V")
        if np.any(np.asarray(self.v)[m == 0] != 0):
            raise CircuitContractError("Pixel voltage must be 0 V wherever the mask is 0 V")
        return self


class CircuitRun(NamedTuple):
    a_hat: np.ndarray
    traces: List[StageTrace]
    divergence: DivergenceCounters


def window_nodes(signals: WindowSignals,
                 pairs: ConductancePairs,
                 size: int,
                 model: ModelImpl = ModelImpl.MSC,
                 config: Optional[CircuitParams] = None,
                 device: Optional[DeviceParams] = None,
                 monitor: Optional[CircuitMonitor] = None) -> Dict[str, np.ndarray]:
    """Every node voltage of the window circuit."""
    config = config or CircuitParams()
    device = device or DeviceParams()
    model = ModelImpl(model)
    v = np.asarray(signals.v, dtype=np.float64)
    m = np.asarray(signals.m, dtype=np.float64)
    c = signals.center

    a_conv = crossbar_conv(v, pairs, config, device, monitor)
    m_conv = crossbar_conv(m, pairs, config, device, monitor)
    m_zero2one = signal_convert_zero2one(m_conv, config, monitor)
    n = divider(a_conv, m_zero2one, config, monitor)
    noisy_center = inverter(m[..., c])

    if model == ModelImpl.MSC:
        f_conv = rc_fixed_conv(m, size, config, device, monitor)
        reliability = comparator_threshold(f_conv, size - 2, config.comparator_absorb)
    else:
        f_conv = None
        reliability = np.ones_like(a_conv)

    gated = multiplier(n, noisy_center, config, monitor)
    if model == ModelImpl.MSC:
        gated = multiplier(gated, reliability, config, monitor)
    output = adder(v[..., c], gated, config, monitor)

    if monitor is not None:
        noisy = noisy_center == 1.0
        monitor.negative_denominator_windows += int(np.count_nonzero(noisy & (m_conv < 0)))
        monitor.zero_denominator_windows += int(np.count_nonzero(
            noisy & (np.abs(m_conv) <= config.comparator_absorb) & (a_conv != 0)
        ))

    nodes = {
        "A_conv": a_conv,
        "M_conv": m_conv,
        "M_conv_zero2one": m_zero2one,
        "N": n,
        "M_A_center": noisy_center,
        "F_M": reliability,
        "output": output,
    }
    if f_conv is not None:
        nodes["F_conv"] = f_conv
    return nodes


def window_msc(signals: WindowSignals,
               pairs: ConductancePairs,
               size: int,
               config: Optional[CircuitParams] = None,
               device: Optional[DeviceParams] = None,
               monitor: Optional[CircuitMonitor] = None):
    return window_nodes(signals, pairs, size, ModelImpl.MSC, config, device, monitor)["output"]


def window_msce(signals: WindowSignals,
                pairs: ConductancePairs,
                config: Optional[CircuitParams] = None,
                device: Optional[DeviceParams] = None,
                monitor: Optional[CircuitMonitor] = None):
    return window_nodes(signals, pairs, pairs.size, ModelImpl.MSCE, config, device, monitor)["output"]


def extract_windows(grid: np.ndarray, size: int) -> np.ndarray:
    """(H, W) -> (H, W, size*size) zero-padded windows, row-major taps."""
    half = size // 2
    padded = np.pad(np.asarray(grid, dtype=np.float64), half, mode="constant", constant_values=0.0)
    windows = sliding_window_view(padded, (size, size))
    return windows.reshape(grid.shape[0], grid.shape[1], size * size)


def stage_pairs(kernel: Kernel,
                config: CircuitParams,
                device: DeviceParams,
                stage: int = 0) -> ConductancePairs:
    pairs = map_conductance(kernel, device, config.weight_mode)
    return perturb_pairs(pairs, config.conductance_sigma, config.sigma_seed + stage)


def _run_stage(a_tilde: np.ndarray,
               pairs: ConductancePairs,
               size: int,
               model: ModelImpl,
               config: CircuitParams,
               device: DeviceParams,
               stage: int) -> Tuple[np.ndarray, StageTrace, DivergenceCounters]:
    m_tilde = nonnoisy_mask(a_tilde).astype(np.float64)
    height = a_tilde.shape[0]
    v_windows = extract_windows(a_tilde, size)
    m_windows = extract_windows(m_tilde, size)
    WindowSignals(v_windows, m_windows).validate()

    workers = min(config.workers, height)
    bounds = np.linspace(0, height, workers + 1).astype(int)

    def band(i: int):
        monitor = CircuitMonitor()
        rows = slice(bounds[i], bounds[i + 1])
        nodes = window_nodes(WindowSignals(v_windows[rows], m_windows[rows]), pairs, size, model,
                             config, device, monitor)
        return nodes, monitor

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(band, range(workers)))
    else:
        results = [band(0)]

    output = np.vstack([nodes["output"] for nodes, _ in results])
    n = np.vstack([nodes["N"] for nodes, _ in results])
    reliability = np.vstack([np.broadcast_to(nodes["F_M"], nodes["N"].shape) for nodes, _ in results])
    counters = DivergenceCounters()
    for _, monitor in results:
        counters = counters.merge(monitor.to_counters())

    noisy_map = (m_tilde == 0).astype(np.uint8)
    restored = (noisy_map == 1) & (reliability == 1) & (n != 0)
    trace = StageTrace(stage=stage, size=size, n=n, noisy_map=noisy_map, reliability=reliability, restored=restored)
    return output, trace, counters


def denoise_image_circuit(a_tilde: np.ndarray,
                          model: ModelImpl = ModelImpl.MSC,
                          plan: Optional[StagePlan] = None,
                          config: Optional[CircuitParams] = None,
                          device: Optional[DeviceParams] = None,
                          kernels: Optional[List[Kernel]] = None,
                          quantize: bool = True) -> CircuitRun:
    """
    Slide the window circuit over every pixel of a preprocessed tensor, stage
    by stage. Crossbar states are held fixed: the read voltage must stay at or
    below V_th so inference cannot reprogram a device.
    """
    model = ModelImpl(model)
    if model not in (ModelImpl.MSC, ModelImpl.MSCE):
        raise ConfigError(f"Circuit simulation runs MSC or MSCE, got {model.value}")
    plan = plan or StagePlan()
    config = config or CircuitParams()
    device = device or DeviceParams()
    if not read_is_safe(config.read_voltage, device):
        raise CircuitContractError(
            f"Read voltage {config.read_voltage} V would drift devices with V_th = {device.v_th} V"
        )
    if kernels is None:
        kernels = [resolve_stage_kernel(stage.kernel, model, quantize) for stage in plan.stages]
    if len(kernels) != len(plan.stages):
        raise ConfigError(f"Plan has {len(plan.stages)} stages but {len(kernels)} kernels were given")

    current = np.asarray(a_tilde, dtype=np.float64)
    traces = []
    divergence = DivergenceCounters()
    for i, (stage, kernel) in enumerate(zip(plan.stages, kernels)):
        if kernel.size != stage.size:
            raise ConfigError(f"Stage {i} declares size {stage.size} but its kernel has size {kernel.size}")
        if ReliabilityRule(stage.reliability_rule) == ReliabilityRule.ALWAYS_ONE and model == ModelImpl.MSC:
            logger.warning("Stage %d asks for an always-one gate; the MSC circuit always has its RC path", i)
        if np.abs(current).max(initial=0.0) > device.v_th:
            logger.warning("Stage %d input exceeds V_th; devices are held at their programmed state", i)
        pairs = stage_pairs(kernel, config, device, i)
        current, trace, counters = _run_stage(current, pairs, stage.size, model, config, device, i)
        divergence = divergence.merge(counters)
        logger.info("[%s] stage %d (s=%d): restored %d of %d noisy pixels, %d negative-denominator windows",
                    model.value, i, stage.size, trace.restored_count, int(trace.noisy_map.sum()),
                    counters.negative_denominator_windows)
        traces.append(trace)
    return CircuitRun(current, traces, divergence)
