"""
Static power of the memristor and resistor elements while the circuits run.

A pair driven at v dissipates v^2 * (G+ + G-). Only memristors and the RC
resistor pair are counted; op-amps, comparators, multipliers and MOSFETs are
out of scope and every report says so.
"""

from enum import Enum
from typing import Dict, List, Optional

import numpy as np
from pydantic import Field

from modules.power import published
from modules.quantize.kernels import Kernel
from modules.quantize.ternary import pair_counts
from modules.seconv.data_classes import BaseParams, DeviceParams, ModelImpl, MeanBasis, Billing
from modules.utils.errors import ConfigError

UW = 1e6
SCOPE_NOTE = "memristor and resistor elements only; op-amps, comparators, multipliers and MOSFETs excluded"


class WeightClass(Enum):
    ZERO = "0"
    NONZERO = "1/-1"


class PowerRow(BaseParams):
    weight_class: WeightClass
    model: ModelImpl
    voltages: List[float]
    cells: List[float] = Field(description="Microwatts per input at each voltage")
    mean: float = Field(ge=0, description="Mean over the row, microwatts")
    published_cells: List[float] = Field(default_factory=list)
    published_mean: Optional[float] = None
    flags: List[str] = Field(default_factory=list)


class PowerProfile(BaseParams):
    model: ModelImpl
    mean_basis: MeanBasis
    n_nonzero: int = Field(ge=0)
    n_zero: int = Field(ge=0)
    class_means: Dict[str, float] = Field(description="Microwatts per input by weight class")
    kernel_total: float = Field(ge=0, description="Microwatts for one window with every input at a mean voltage")
    per_input_mean: float = Field(ge=0, description="Microwatts")
    rows: List[PowerRow] = Field(default_factory=list)


class PowerBreakdown(BaseParams):
    model: ModelImpl
    mean_basis: MeanBasis
    per_pair: Dict[str, float] = Field(default_factory=dict, description="Microwatts keyed '<weight class>@<volts>'")
    per_input_mean: float = Field(ge=0, description="Microwatts")
    per_image: float = Field(ge=0, description="Watts")
    programming_total: float = Field(ge=0, description="Microwatts")
    scope: str = Field(default=SCOPE_NOTE)


def _check_model(model: ModelImpl) -> ModelImpl:
    model = ModelImpl(model)
    if model not in (ModelImpl.MSC, ModelImpl.MSCE):
        raise ConfigError(f"Power is modelled for the circuit models MSC and MSCE, got {model.value}")
    return model


def pair_power(v: float, weight_class: WeightClass, device: Optional[DeviceParams] = None) -> float:
    """Microwatts of one conductance pair driven at ``v``."""
    device = device or DeviceParams()
    if WeightClass(weight_class) == WeightClass.ZERO:
        conductance = 2.0 * device.g_off
    else:
        conductance = device.g_on + device.g_off
    return v * v * conductance * UW


def input_power(v: float,
                m: float,
                weight_class: WeightClass,
                model: ModelImpl,
                device: Optional[DeviceParams] = None) -> float:
    """
    Microwatts drawn by one input: the A~ crossbar pair at ``v`` and the M~_A
    crossbar pair at ``m``; MSC adds the fixed-kernel resistor pair at ``m``.
    """
    device = device or DeviceParams()
    model = _check_model(model)
    power = pair_power(v, weight_class, device) + pair_power(m, weight_class, device)
    if model == ModelImpl.MSC:
        power += m * m * (device.g_on + device.g_off) * UW
    return power


def power_rows(model: ModelImpl,
               device: Optional[DeviceParams] = None,
               voltages: Optional[List[float]] = None) -> List[PowerRow]:
    """Per-input power at each voltage with m = 1 V, one row per weight class."""
    model = _check_model(model)
    voltages = voltages or published.READ_VOLTAGES
    rows = []
    for weight_class in WeightClass:
        cells = [input_power(v, 1.0, weight_class, model, device) for v in voltages]
        key = (weight_class.value, model.value)
        notes = [(v, published.flag_note(key[0], key[1], v)) for v in voltages]
        flags = [f"{v} V: {note}" for v, note in notes if note]
        if key in published.FLAGGED_MEANS:
            flags.append(f"mean: {published.FLAGGED_MEANS[key]}")
        published_cells = []
        if list(voltages) == published.READ_VOLTAGES:
            published_cells = list(published.PER_INPUT_CELLS[key])
        rows.append(PowerRow(
            weight_class=weight_class,
            model=model,
            voltages=list(voltages),
            cells=cells,
            mean=float(np.mean(cells)),
            published_cells=published_cells,
            published_mean=published.PER_INPUT_ROW_MEANS[key],
            flags=flags,
        ))
    return rows


def kernel_power_profile(kernel: Kernel,
                         model: ModelImpl,
                         mean_basis: MeanBasis = MeanBasis.PUBLISHED,
                         device: Optional[DeviceParams] = None,
                         voltages: Optional[List[float]] = None) -> PowerProfile:
    """
    Table rows plus the kernel mean per input,
    (n_nonzero * mean(+-1) + n_zero * mean(0)) / s^2.

    The published basis uses the printed mean column, which is what the
    published kernel totals and image table are computed from. The model basis
    averages the computed cells.
    """
    model = _check_model(model)
    mean_basis = MeanBasis(mean_basis)
    rows = power_rows(model, device, voltages)
    if mean_basis == MeanBasis.PUBLISHED:
        class_means = {row.weight_class: row.published_mean for row in rows}
    else:
        class_means = {row.weight_class: row.mean for row in rows}

    n_nonzero, n_zero = kernel.counts()
    total = n_nonzero * class_means[WeightClass.NONZERO.value] + n_zero * class_means[WeightClass.ZERO.value]
    return PowerProfile(
        model=model,
        mean_basis=mean_basis,
        n_nonzero=n_nonzero,
        n_zero=n_zero,
        class_means=class_means,
        kernel_total=total,
        per_input_mean=total / (kernel.size * kernel.size),
        rows=rows,
    )


def image_power(n_pixels: int,
                density: float,
                kernel: Kernel,
                model: ModelImpl,
                mean_basis: MeanBasis = MeanBasis.PUBLISHED,
                device: Optional[DeviceParams] = None,
                billing: Billing = Billing.PIXEL) -> float:
    """
    Watts for an image of ``n_pixels``: n * (1 - D) * per-input mean. Noisy
    inputs sit at 0 V and draw nothing. Pixel billing counts every input
    once; window billing counts it once per window it falls in (s^2 times).
    """
    if not 0.0 <= density <= 1.0:
        raise ConfigError(f"Noise density must lie in [0, 1], got {density}")
    if n_pixels < 0:
        raise ConfigError(f"Pixel count must be non-negative, got {n_pixels}")
    profile = kernel_power_profile(kernel, model, mean_basis, device)
    watts = n_pixels * (1.0 - density) * profile.per_input_mean / UW
    if Billing(billing) == Billing.WINDOW:
        watts *= kernel.size * kernel.size
    return watts


def image_power_table(kernel: Kernel,
                      n_pixels: int = 100 * 100,
                      densities: Optional[List[float]] = None,
                      mean_basis: MeanBasis = MeanBasis.PUBLISHED,
                      device: Optional[DeviceParams] = None) -> Dict[str, List[float]]:
    densities = densities or published.IMAGE_DENSITIES
    return {
        model.value: [image_power(n_pixels, d, kernel, model, mean_basis, device) for d in densities]
        for model in (ModelImpl.MSC, ModelImpl.MSCE)
    }


def programming_power_total(n_memristors: int, per_device: float) -> float:
    """Upper bound in microwatts: every device switches fully."""
    if n_memristors < 0:
        raise ConfigError(f"Device count must be non-negative, got {n_memristors}")
    return n_memristors * per_device


def power_breakdown(kernel: Kernel,
                    model: ModelImpl,
                    density: float,
                    n_pixels: int,
                    per_device_programming: float = published.PROGRAMMING_PER_DEVICE_UW,
                    mean_basis: MeanBasis = MeanBasis.PUBLISHED,
                    device: Optional[DeviceParams] = None) -> PowerBreakdown:
    profile = kernel_power_profile(kernel, model, mean_basis, device)
    per_pair = {
        f"{weight_class.value}@{v}": pair_power(v, weight_class, device)
        for weight_class in WeightClass for v in published.READ_VOLTAGES
    }
    nonzero_pairs, zero_pairs = pair_counts(kernel)
    return PowerBreakdown(
        model=profile.model,
        mean_basis=profile.mean_basis,
        per_pair=per_pair,
        per_input_mean=profile.per_input_mean,
        per_image=image_power(n_pixels, density, kernel, model, mean_basis, device),
        programming_total=programming_power_total(2 * (nonzero_pairs + zero_pairs), per_device_programming),
    )
