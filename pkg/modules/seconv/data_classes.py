import math
from enum import Enum
from typing import Optional, Dict, List, Any

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator, field_serializer, ConfigDict


class ModelImpl(Enum):
    FPSC = "FPSC"
    TSC = "TSC"
    MSC = "MSC"
    MSCE = "MSCE"


class WeightMode(Enum):
    DIFFERENTIAL = "differential"
    SINGLE = "single"


class ReliabilityRule(Enum):
    THRESHOLDED = "thresholded"
    ALWAYS_ONE = "always-one"


class Precision(Enum):
    FULL = "full"
    TERNARY = "ternary"


class PgmFormat(Enum):
    P2 = "P2"
    P5 = "P5"


class CropPolicy(Enum):
    CENTER = "center"
    RANDOM = "random"


class ReportFormat(Enum):
    CSV = "csv"
    JSON = "json"
    TEXT = "text"


class MeanBasis(Enum):
    PUBLISHED = "published"
    MODEL = "model"


class Billing(Enum):
    PIXEL = "pixel"
    WINDOW = "window"


class BaseParams(BaseModel):
    model_config = ConfigDict(protected_namespaces=(), use_enum_values=True)

    def to_dict(self) -> Dict:
        return self.model_dump(mode="json")


class NoiseParams(BaseParams):
    """Salt-and-pepper corruption parameters"""
    density: float = Field(default=0.1, ge=0.0, le=1.0, description="Probability that a pixel is corrupted (D)")
    salt_fraction: float = Field(
        default=0.5,
        ge=0.0,
        le=1.0,
        description="Probability that a corrupted pixel becomes salt (255) rather than pepper (0)"
    )
    seed: int = Field(default=0, ge=0, lt=2 ** 64, description="Seed of the PCG64 generator")


class DeviceParams(BaseParams):
    """Threshold memristor parameters"""
    r_on: float = Field(default=1e4, gt=0, description="Low resistance state in ohms")
    r_off: float = Field(default=1e6, gt=0, description="High resistance state in ohms")
    v_th: float = Field(default=1.5, gt=0, description="Switching threshold voltage")
    alpha: float = Field(default=0.0, description="Sub-threshold change rate, ohms/(V*s)")
    beta: float = Field(default=1e7, gt=0, description="Above-threshold change rate, ohms/(V*s)")
    dt: float = Field(default=1e-4, gt=0, description="Explicit Euler time step in seconds")

    @model_validator(mode="after")
    def check_resistance_order(self):
        if not self.r_on < self.r_off:
            raise ValueError(f"r_on ({self.r_on}) must be smaller than r_off ({self.r_off})")
        return self

    @property
    def g_on(self) -> float:
        return 1.0 / self.r_on

    @property
    def g_off(self) -> float:
        return 1.0 / self.r_off


class CircuitParams(BaseParams):
    """Behavioral circuit parameters"""
    weight_mode: WeightMode = Field(default=WeightMode.DIFFERENTIAL, description="Conductance pair or single device")
    transimpedance_gain: Optional[float] = Field(
        default=None,
        gt=0,
        description="Current-to-voltage gain in ohms. None picks unit gain for a weight of 1"
    )
    comparator_ref: float = Field(default=0.0, description="Reference of the zero-to-one signal converter")
    rail: float = Field(default=15.0, gt=0, description="Op-amp output clamp, volts")
    divider_floor: float = Field(default=1e-6, gt=0, description="Smallest denominator magnitude at the divider")
    conductance_sigma: float = Field(default=0.0, ge=0, description="Relative std-dev of programmed conductance")
    sigma_seed: int = Field(default=0, ge=0, description="Seed of the conductance perturbation")
    comparator_absorb: float = Field(default=1e-9, ge=0, description="Absorb band of the reliability comparator")
    read_voltage: float = Field(default=1.0, gt=0, description="Largest voltage applied to a crossbar during inference")
    workers: int = Field(default=1, ge=1, description="Row bands evaluated concurrently")

    def resolve_gain(self, device: DeviceParams) -> float:
        if self.transimpedance_gain is not None:
            return self.transimpedance_gain
        if WeightMode(self.weight_mode) == WeightMode.SINGLE:
            return 1.0 / device.g_on
        return 1.0 / (device.g_on - device.g_off)


class StageParams(BaseParams):
    size: int = Field(default=3, ge=1, description="Odd kernel size s")
    kernel: str = Field(default="ones3", description="Fixture kernel name or weight-file path")
    reliability_rule: ReliabilityRule = Field(default=ReliabilityRule.THRESHOLDED)

    @field_validator("size")
    @classmethod
    def check_odd(cls, v: int) -> int:
        if v % 2 == 0:
            raise ValueError(f"kernel size must be odd, got {v}")
        return v

    @model_validator(mode="after")
    def check_eta(self):
        if ReliabilityRule(self.reliability_rule) == ReliabilityRule.THRESHOLDED and self.size - 2 < 1:
            raise ValueError("thresholded reliability needs eta = s - 2 >= 1")
        return self

    @property
    def eta(self) -> float:
        return float(self.size - 2)


class StagePlan(BaseParams):
    stages: List[StageParams] = Field(default_factory=lambda: [StageParams()], min_length=1)

    @classmethod
    def from_sizes(cls,
                   sizes: List[int],
                   reliability_rule: ReliabilityRule = ReliabilityRule.THRESHOLDED,
                   kernel: Optional[str] = None) -> 'StagePlan':
        return cls(stages=[
            StageParams(size=s, kernel=kernel or f"ones{s}", reliability_rule=reliability_rule)
            for s in sizes
        ])

    @property
    def sizes(self) -> List[int]:
        return [stage.size for stage in self.stages]

    def describe(self) -> str:
        return "+".join(f"{stage.size}x{stage.size}:{stage.kernel}" for stage in self.stages)


FULL_CASCADE_SIZES = [3, 5, 7, 9, 11, 13, 15]


class StageTrace(BaseModel):
    """Intermediates of one restoration stage. Arrays are kept as numpy grids."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    stage: int
    size: int
    n: np.ndarray
    noisy_map: np.ndarray
    reliability: np.ndarray
    restored: np.ndarray

    @property
    def restored_coordinates(self) -> List[List[int]]:
        return np.argwhere(self.restored).tolist()

    @property
    def restored_count(self) -> int:
        return int(np.count_nonzero(self.restored))

    def to_json_dict(self, include_maps: bool = False) -> Dict[str, Any]:
        data = {
            "stage": self.stage,
            "size": self.size,
            "noisy_count": int(np.count_nonzero(self.noisy_map)),
            "restored_count": self.restored_count,
            "restored_coordinates": self.restored_coordinates,
        }
        if include_maps:
            data["N"] = self.n.tolist()
            data["M_A"] = self.noisy_map.astype(int).tolist()
            data["F_M"] = self.reliability.astype(int).tolist()
        return data


class DivergenceCounters(BaseParams):
    """Windows where the circuit leaves the ideal reference arithmetic"""
    negative_denominator_windows: int = Field(default=0, ge=0)
    zero_denominator_windows: int = Field(default=0, ge=0, description="Zero denominator with nonzero numerator")
    clamped_nodes: int = Field(default=0, ge=0, description="Op-amp outputs that hit a rail")
    floor_engagements: int = Field(default=0, ge=0, description="Divider denominators raised to the floor")
    absorbed_denominator_windows: int = Field(
        default=0, ge=0, description="Denominators just above the converter reference that were still pulled to 1 V"
    )

    def merge(self, other: 'DivergenceCounters') -> 'DivergenceCounters':
        return DivergenceCounters(**{
            name: getattr(self, name) + getattr(other, name) for name in DivergenceCounters.model_fields
        })


SSIM_DEFINITION = "gaussian-11x11-sigma1.5-K1=0.01-K2=0.03-L=255"


class DenoiseReport(BaseParams):
    model: ModelImpl
    plan: str = Field(description="Stage plan, e.g. 3x3:ones3")
    density: float = Field(ge=0.0, le=1.0)
    seed: int = Field(ge=0)
    psnr: float = Field(description="dB, +inf for identical images")
    ssim: float
    ssim_definition: str = Field(default=SSIM_DEFINITION)
    image_count: int = Field(default=1, ge=1, description="Images averaged into psnr/ssim")
    noisy_pixel_count: int = Field(default=0, ge=0)
    restored_pixel_count: int = Field(ge=0)
    divergence: DivergenceCounters = Field(default_factory=DivergenceCounters)
    power_estimate: float = Field(default=0.0, ge=0, description="Watts, memristor/resistor elements only")
    config: Dict[str, Any] = Field(default_factory=dict, description="Effective configuration after defaults")

    @field_serializer("psnr")
    def serialize_psnr(self, v: float):
        if math.isinf(v):
            return "inf"
        return v

    @field_validator("psnr", mode="before")
    @classmethod
    def parse_psnr(cls, v):
        if isinstance(v, str) and v.lower() == "inf":
            return float("inf")
        return v

    def to_row(self) -> Dict[str, Any]:
        data = self.to_dict()
        divergence = data.pop("divergence")
        data.pop("config")
        data.update(divergence)
        return data


class PowerParams(BaseParams):
    mean_basis: MeanBasis = Field(default=MeanBasis.PUBLISHED, description="Printed mean column or computed cells")
    billing: Billing = Field(default=Billing.PIXEL, description="Bill each input once per pixel or once per window")
    kernel: str = Field(default="fixture5", description="Kernel whose weight counts drive the power tables")
    n_pixels: int = Field(default=100 * 100, ge=0)
    programming_voltage: float = Field(default=2.0, gt=0)
    per_device_programming: float = Field(default=15.7, ge=0, description="Published per-device programming power, uW")


class ExperimentParams(BaseParams):
    densities: List[float] = Field(default_factory=lambda: [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8], min_length=1)
    models: List[ModelImpl] = Field(default_factory=lambda: list(ModelImpl), min_length=1)
    image_count: int = Field(default=5, ge=1)
    image_size: int = Field(default=100, ge=11)
    corpus_image: str = Field(default="scene")
    base_seed: int = Field(default=0, ge=0)
    ablation_density: float = Field(default=0.6, ge=0.0, le=1.0)
    ablation_kernel: str = Field(default="cross3")
    ablation_model: ModelImpl = Field(default=ModelImpl.MSCE)

    @field_validator("densities")
    @classmethod
    def check_densities(cls, v: List[float]) -> List[float]:
        for d in v:
            if not 0.0 <= d <= 1.0:
                raise ValueError(f"density {d} outside [0, 1]")
        return v


class AblationReport(BaseParams):
    """Differential pairs against single memristors on one seeded image set"""
    model: ModelImpl
    kernel: str
    density: float = Field(ge=0.0, le=1.0)
    seeds: List[int]
    differential_psnr: List[float]
    single_psnr: List[float]
    differential_ssim: List[float]
    single_ssim: List[float]
    differential_win_fraction: float = Field(ge=0.0, le=1.0)
    mean_single_minus_differential: float = Field(description="Mean restored-value difference on restored pixels")
    zero_denominator_bias: float = Field(
        description="Mean single-mode value where the differential weighted denominator is zero"
    )
    zero_denominator_windows: int = Field(
        default=0, ge=0,
        description="Noisy pixels with clean neighbours only on zero-weight taps; differential mode restores them to 0"
    )
    config: Dict[str, Any] = Field(default_factory=dict)

    @field_serializer("differential_psnr", "single_psnr")
    def serialize_psnr_list(self, v: List[float]):
        return ["inf" if math.isinf(x) else x for x in v]


class TraceReport(BaseParams):
    """Every intermediate of one 5x5 walkthrough, theory and circuit side by side"""
    model: ModelImpl
    kernel: List[List[float]]
    size: int
    input: List[List[float]] = Field(description="Preprocessed tensor A~")
    theory: Dict[str, List[List[float]]]
    circuit: Dict[str, List[List[float]]]
    deltas: Dict[str, float] = Field(description="max |theory - circuit| per node")
    tolerance: float = Field(default=1e-6)
    agree: bool
    divergence: DivergenceCounters = Field(default_factory=DivergenceCounters)


class RunParams(BaseParams):
    """Effective configuration of a command"""
    input: Optional[str] = Field(default=None, description="Input PGM path")
    weights: Optional[str] = Field(default=None, description="Weight file overriding the stage kernels")
    output_dir: str = Field(default="outputs")
    model: ModelImpl = Field(default=ModelImpl.TSC)
    quantize: bool = Field(default=False, description="Ternarize full-precision weights for ternary models")
    report_format: ReportFormat = Field(default=ReportFormat.JSON)
    pgm_format: PgmFormat = Field(default=PgmFormat.P5)
    crop_size: Optional[int] = Field(default=None, ge=1)
    crop_policy: CropPolicy = Field(default=CropPolicy.CENTER)
    noise: NoiseParams = Field(default_factory=NoiseParams)
    stages: StagePlan = Field(default_factory=StagePlan)
    device: DeviceParams = Field(default_factory=DeviceParams)
    circuit: CircuitParams = Field(default_factory=CircuitParams)
    power: PowerParams = Field(default_factory=PowerParams)
    experiments: ExperimentParams = Field(default_factory=ExperimentParams)
