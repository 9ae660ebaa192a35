"""
Ideal selective-convolution restoration.

restore_tsc follows the thresholded-reliability formulation (used for both
full-precision and ternary kernels); restore_theory_msce is the zero-to-one
reformulation with the reliability gate held at 1.
"""

from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Tuple, Union

import numpy as np
from scipy import ndimage

from modules.image.tensor_ops import nonnoisy_mask, invert_mask
from modules.quantize.kernels import Kernel, get_kernel
from modules.quantize.ternary import ternarize
from modules.seconv.data_classes import StagePlan, StageTrace, ReliabilityRule, ModelImpl
from modules.utils.errors import ConfigError
from modules.utils.logger import get_logger

logger = get_logger()

KernelLike = Union[Kernel, np.ndarray]


def _kernel_array(kernel: KernelLike) -> np.ndarray:
    k = kernel.array if isinstance(kernel, Kernel) else np.asarray(kernel, dtype=np.float64)
    if k.ndim != 2 or k.shape[0] != k.shape[1] or k.shape[0] % 2 == 0:
        raise ConfigError(f"Kernel must be square with odd size, got shape {k.shape}")
    return k


def conv2d_same(grid: np.ndarray, kernel: KernelLike, workers: int = 1) -> np.ndarray:
    """Cross-correlation with zero padding; output has the input's shape."""
    k = _kernel_array(kernel)
    grid = np.asarray(grid, dtype=np.float64)
    if workers <= 1 or grid.shape[0] < 2 * workers:
        return ndimage.correlate(grid, k, mode="constant", cval=0.0)

    # each band carries a halo of s // 2 rows so every output row sees its full window
    half = k.shape[0] // 2
    bounds = np.linspace(0, grid.shape[0], workers + 1).astype(int)

    def band(i: int) -> np.ndarray:
        top, bottom = bounds[i], bounds[i + 1]
        lo, hi = max(top - half, 0), min(bottom + half, grid.shape[0])
        out = ndimage.correlate(grid[lo:hi], k, mode="constant", cval=0.0)
        return out[top - lo:top - lo + (bottom - top)]

    with ThreadPoolExecutor(max_workers=workers) as pool:
        return np.vstack(list(pool.map(band, range(workers))))


def fixed_conv(mask: np.ndarray, size: int, workers: int = 1) -> np.ndarray:
    if size % 2 == 0:
        raise ConfigError(f"Fixed kernel size must be odd, got {size}")
    return conv2d_same(mask, np.ones((size, size)), workers)


def _normalized_average(a_conv: np.ndarray, m_conv: np.ndarray) -> np.ndarray:
    n = np.zeros_like(a_conv)
    nz = m_conv != 0
    n[nz] = a_conv[nz] / m_conv[nz]
    return n


def restore_tsc(a_tilde: np.ndarray,
                m_tilde: np.ndarray,
                kernel: KernelLike,
                size: Optional[int] = None,
                reliability_rule: ReliabilityRule = ReliabilityRule.THRESHOLDED,
                stage: int = 0,
                workers: int = 1) -> Tuple[np.ndarray, StageTrace]:
    """
    N = A_conv / M_conv where M_conv != 0 (literal sign kept), else 0.
    F_M = [fixed_conv(M) >= s - 2]; M_A = 1 - M; A_hat = A + N * M_A * F_M.
    """
    k = _kernel_array(kernel)
    size = size or k.shape[0]
    a_tilde = np.asarray(a_tilde, dtype=np.float64)

    a_conv = conv2d_same(a_tilde, k, workers)
    m_conv = conv2d_same(m_tilde, k, workers)
    n = _normalized_average(a_conv, m_conv)

    if ReliabilityRule(reliability_rule) == ReliabilityRule.ALWAYS_ONE:
        reliability = np.ones_like(a_tilde)
    else:
        f_conv = fixed_conv(m_tilde, size, workers)
        reliability = (f_conv >= size - 2).astype(np.float64)

    noisy_map = invert_mask(m_tilde)
    update = n * noisy_map * reliability
    a_hat = a_tilde + update
    restored = (noisy_map == 1) & (reliability == 1) & (update != 0)
    trace = StageTrace(stage=stage, size=size, n=n, noisy_map=noisy_map, reliability=reliability, restored=restored)
    return a_hat, trace


def restore_theory_msce(a_tilde: np.ndarray,
                        m_tilde: np.ndarray,
                        kernel: KernelLike,
                        stage: int = 0,
                        workers: int = 1) -> Tuple[np.ndarray, StageTrace]:
    """
    M_conv zeros become 1 (other values kept, negatives included);
    N = A_conv / M_conv^zero2one; A_hat = A + N * M_A.
    """
    k = _kernel_array(kernel)
    a_tilde = np.asarray(a_tilde, dtype=np.float64)

    a_conv = conv2d_same(a_tilde, k, workers)
    m_conv = conv2d_same(m_tilde, k, workers)
    m_zero2one = np.where(m_conv == 0, 1.0, m_conv)
    n = a_conv / m_zero2one

    noisy_map = invert_mask(m_tilde)
    update = n * noisy_map
    a_hat = a_tilde + update
    restored = (noisy_map == 1) & (update != 0)
    trace = StageTrace(stage=stage, size=k.shape[0], n=n, noisy_map=noisy_map,
                       reliability=np.ones_like(a_tilde), restored=restored)
    return a_hat, trace


def resolve_stage_kernel(name_or_path: str, model: ModelImpl, quantize: bool = True) -> Kernel:
    """
    Load a stage kernel and bring it to the precision the model runs at:
    FPSC keeps full precision, the ternary models need ternary weights.
    """
    kernel = get_kernel(name_or_path)
    if ModelImpl(model) == ModelImpl.FPSC or kernel.is_ternary:
        return kernel
    if not quantize:
        raise ConfigError(
            f"Model {ModelImpl(model).value} needs ternary weights; '{name_or_path}' is full precision "
            f"(pass --quantize to ternarize it)"
        )
    return ternarize(kernel)


def cascade(a_tilde: np.ndarray,
            plan: StagePlan,
            model: ModelImpl = ModelImpl.TSC,
            kernels: Optional[List[KernelLike]] = None,
            quantize: bool = True,
            workers: int = 1) -> Tuple[np.ndarray, List[StageTrace]]:
    """
    Apply the plan's stages in order. The non-noisy mask is recomputed from
    each stage output (nonzero -> 1) before the next stage; no clamping between
    stages.
    """
    model = ModelImpl(model)
    if kernels is None:
        kernels = [resolve_stage_kernel(stage.kernel, model, quantize) for stage in plan.stages]
    if len(kernels) != len(plan.stages):
        raise ConfigError(f"Plan has {len(plan.stages)} stages but {len(kernels)} kernels were given")

    current = np.asarray(a_tilde, dtype=np.float64)
    traces = []
    for i, (stage, kernel) in enumerate(zip(plan.stages, kernels)):
        if _kernel_array(kernel).shape[0] != stage.size:
            raise ConfigError(f"Stage {i} declares size {stage.size} but its kernel has a different size")
        m_tilde = nonnoisy_mask(current)
        if model == ModelImpl.MSCE:
            current, trace = restore_theory_msce(current, m_tilde, kernel, stage=i, workers=workers)
        else:
            current, trace = restore_tsc(current, m_tilde, kernel, stage.size, stage.reliability_rule,
                                         stage=i, workers=workers)
        logger.info("[Cascade] stage %d (s=%d): restored %d of %d noisy pixels",
                    i, stage.size, trace.restored_count, int(trace.noisy_map.sum()))
        traces.append(trace)
    return current, traces
