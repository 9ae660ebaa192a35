from typing import Dict, List, Optional, Tuple, Any

import numpy as np

from modules.circuit.blocks import CircuitMonitor
from modules.circuit.simulator import (WindowSignals, denoise_image_circuit, extract_windows, stage_pairs,
                                       window_nodes)
from modules.device.memristor import MemristorDevice, program_constant
from modules.experiments.model_factory import DenoiserFactory, DenoiseResult
from modules.experiments.reports import ExperimentStatistics
from modules.image.noise import inject_sap
from modules.image.tensor_ops import normalize, denormalize, preprocess, nonnoisy_mask
from modules.power import published
from modules.power.metrics import psnr, ssim
from modules.power.power_model import (image_power, image_power_table, kernel_power_profile, power_rows,
                                       programming_power_total)
from modules.quantize.kernels import Kernel, get_kernel
from modules.quantize.ternary import pair_counts, ternarize
from modules.seconv.data_classes import (RunParams, NoiseParams, ModelImpl, DenoiseReport, AblationReport,
                                         TraceReport, StagePlan, StageParams, WeightMode, MeanBasis,
                                         DivergenceCounters)
from modules.seconv.reference import conv2d_same, fixed_conv, restore_tsc, restore_theory_msce, resolve_stage_kernel
from modules.utils.logger import get_logger

logger = get_logger()

CIRCUIT_MODELS = (ModelImpl.MSC, ModelImpl.MSCE)
TRACE_NODES = ["A_conv", "M_conv", "M_conv_zero2one", "N", "M_A", "F_M", "A_hat"]


class DenoiseService:
    """Shared service behind the command-line experiments."""

    def __init__(self, params: Optional[RunParams] = None):
        self.params = params or RunParams()
        self.stats_generator = ExperimentStatistics()

    def restore(self,
                noisy: np.ndarray,
                model: ModelImpl,
                kernels: Optional[List[Kernel]] = None,
                theory: bool = False) -> Tuple[np.ndarray, np.ndarray, DenoiseResult]:
        """
        Normalize and preprocess an 8-bit noisy grid, restore it and bring it
        back to 8 bits.

        Returns:
            Tuple of (restored 8-bit grid, preprocessed tensor, raw result)
        """
        a_tilde = preprocess(normalize(noisy))
        denoiser = DenoiserFactory.create_denoiser(model, self.params, kernels, theory)
        result = denoiser.denoise(a_tilde)
        return denormalize(result.a_hat), a_tilde, result

    def estimate_power(self, model: ModelImpl, result: DenoiseResult, kernels: Optional[List[Kernel]] = None) -> float:
        """Watts summed over stages; each stage is billed at its own input's noisy fraction."""
        model = ModelImpl(model)
        if model not in CIRCUIT_MODELS:
            return 0.0
        kernels = kernels or DenoiserFactory.create_denoiser(model, self.params).kernels
        total = 0.0
        for trace, kernel in zip(result.traces, kernels):
            density = float(np.mean(trace.noisy_map))
            total += image_power(trace.noisy_map.size, density, kernel, model,
                                 self.params.power.mean_basis, self.params.device, self.params.power.billing)
        return total

    def evaluate(self,
                 clean: np.ndarray,
                 noisy: np.ndarray,
                 model: ModelImpl,
                 noise: NoiseParams,
                 kernels: Optional[List[Kernel]] = None,
                 theory: bool = False) -> Tuple[np.ndarray, DenoiseReport, DenoiseResult]:
        model = ModelImpl(model)
        restored, a_tilde, result = self.restore(noisy, model, kernels, theory)
        restored_mask = np.zeros(a_tilde.shape, dtype=bool)
        for trace in result.traces:
            restored_mask |= trace.restored

        report = DenoiseReport(
            model=model,
            plan=self.params.stages.describe(),
            density=noise.density,
            seed=noise.seed,
            psnr=psnr(clean, restored),
            ssim=ssim(clean, restored),
            noisy_pixel_count=int(np.count_nonzero(a_tilde == 0)),
            restored_pixel_count=int(np.count_nonzero(restored_mask)),
            divergence=result.divergence,
            power_estimate=self.estimate_power(model, result, kernels),
            config=self.params.to_dict(),
        )
        return restored, report, result

    def denoise_image(self,
                      clean: np.ndarray,
                      model: ModelImpl,
                      noise: Optional[NoiseParams] = None) -> Tuple[np.ndarray, np.ndarray, DenoiseReport]:
        noise = noise or self.params.noise
        noisy, _ = inject_sap(clean, noise)
        restored, report, _ = self.evaluate(clean, noisy, model, noise)
        logger.info("[%s] D=%g seed=%d: PSNR %.2f dB, SSIM %.4f, restored %d of %d",
                    ModelImpl(model).value, noise.density, noise.seed, report.psnr, report.ssim,
                    report.restored_pixel_count, report.noisy_pixel_count)
        return noisy, restored, report

    def sweep(self,
              images: List[np.ndarray],
              densities: Optional[List[float]] = None,
              models: Optional[List[ModelImpl]] = None) -> List[DenoiseReport]:
        """
        One row per (model, density). Image i is corrupted with seed
        base_seed + i at every density, so corruption sets are nested as D
        grows and every model sees the same noisy images.
        """
        experiments = self.params.experiments
        densities = densities or experiments.densities
        models = [ModelImpl(m) for m in (models or experiments.models)]
        base_seed = experiments.base_seed
        salt_fraction = self.params.noise.salt_fraction

        rows = []
        for model in models:
            for density in densities:
                psnrs, ssims, powers = [], [], []
                noisy_count = restored_count = 0
                divergence = DivergenceCounters()
                for i, clean in enumerate(images):
                    noise = NoiseParams(density=density, salt_fraction=salt_fraction, seed=base_seed + i)
                    noisy, _ = inject_sap(clean, noise)
                    _, report, _ = self.evaluate(clean, noisy, model, noise)
                    psnrs.append(report.psnr)
                    ssims.append(report.ssim)
                    powers.append(report.power_estimate)
                    noisy_count += report.noisy_pixel_count
                    restored_count += report.restored_pixel_count
                    divergence = divergence.merge(report.divergence)
                rows.append(DenoiseReport(
                    model=model,
                    plan=self.params.stages.describe(),
                    density=density,
                    seed=base_seed,
                    psnr=float(np.mean(psnrs)),
                    ssim=float(np.mean(ssims)),
                    image_count=len(images),
                    noisy_pixel_count=noisy_count,
                    restored_pixel_count=restored_count,
                    divergence=divergence,
                    power_estimate=float(np.mean(powers)),
                    config=self.params.to_dict(),
                ))
                logger.info("[Sweep] %s D=%g: mean PSNR %.2f dB over %d images",
                            model.value, density, rows[-1].psnr, len(images))
        return rows

    def ablation(self,
                 images: List[np.ndarray],
                 density: Optional[float] = None,
                 kernel_name: Optional[str] = None,
                 model: Optional[ModelImpl] = None) -> AblationReport:
        """Run the circuit with differential pairs and with single devices on the same noisy images."""
        experiments = self.params.experiments
        density = experiments.ablation_density if density is None else density
        kernel_name = kernel_name or experiments.ablation_kernel
        model = ModelImpl(model or experiments.ablation_model)
        kernel = resolve_stage_kernel(kernel_name, model, quantize=True)
        plan = StagePlan(stages=[StageParams(size=kernel.size, kernel=kernel_name)])

        seeds, diff_psnr, single_psnr, diff_ssim, single_ssim = [], [], [], [], []
        deltas, zero_den_values = [], []
        zero_den_windows = 0
        for i, clean in enumerate(images):
            seed = experiments.base_seed + i
            noisy, _ = inject_sap(clean, NoiseParams(density=density, salt_fraction=self.params.noise.salt_fraction,
                                                     seed=seed))
            a_tilde = preprocess(normalize(noisy))
            runs = {}
            for mode in (WeightMode.DIFFERENTIAL, WeightMode.SINGLE):
                circuit = self.params.circuit.model_copy(update={"weight_mode": mode})
                runs[mode] = denoise_image_circuit(a_tilde, model, plan, circuit, self.params.device, [kernel])

            diff_run, single_run = runs[WeightMode.DIFFERENTIAL], runs[WeightMode.SINGLE]
            diff_img, single_img = denormalize(diff_run.a_hat), denormalize(single_run.a_hat)
            seeds.append(seed)
            diff_psnr.append(psnr(clean, diff_img))
            single_psnr.append(psnr(clean, single_img))
            diff_ssim.append(ssim(clean, diff_img))
            single_ssim.append(ssim(clean, single_img))

            trace = diff_run.traces[0]
            restored = trace.restored | single_run.traces[0].restored
            if restored.any():
                deltas.append(float(np.mean(single_run.a_hat[restored] - diff_run.a_hat[restored])))
            has_clean = fixed_conv(nonnoisy_mask(a_tilde), kernel.size) > 0
            zero_den = (trace.noisy_map == 1) & (trace.reliability == 1) & (trace.n == 0) & has_clean
            zero_den_windows += int(np.count_nonzero(zero_den))
            if zero_den.any():
                zero_den_values.append(float(np.mean(single_run.a_hat[zero_den])))

        wins = [d > s for d, s in zip(diff_psnr, single_psnr)]
        report = AblationReport(
            model=model,
            kernel=kernel_name,
            density=density,
            seeds=seeds,
            differential_psnr=diff_psnr,
            single_psnr=single_psnr,
            differential_ssim=diff_ssim,
            single_ssim=single_ssim,
            differential_win_fraction=float(np.mean(wins)) if wins else 0.0,
            mean_single_minus_differential=float(np.mean(deltas)) if deltas else 0.0,
            zero_denominator_bias=float(np.mean(zero_den_values)) if zero_den_values else 0.0,
            zero_denominator_windows=zero_den_windows,
            config=self.params.to_dict(),
        )
        logger.info("[Ablation] differential wins on %.1f%% of %d images; %d noisy pixels had clean neighbours "
                    "only on zero-weight taps", report.differential_win_fraction * 100, len(images), zero_den_windows)
        return report

    def trace(self, a: np.ndarray, kernel_name: Optional[str] = None, model: Optional[ModelImpl] = None) -> TraceReport:
        """
        Every intermediate of one restoration on a small normalized tensor,
        evaluated by the ideal arithmetic and by the window circuit.
        """
        model = ModelImpl(model or self.params.model)
        circuit_model = ModelImpl.MSCE if model == ModelImpl.MSCE else ModelImpl.MSC
        kernel_name = kernel_name or self.params.weights or self.params.stages.stages[0].kernel
        kernel = resolve_stage_kernel(kernel_name, circuit_model, quantize=True)
        size = kernel.size

        a_tilde = preprocess(a)
        m_tilde = nonnoisy_mask(a_tilde)
        a_conv = conv2d_same(a_tilde, kernel)
        m_conv = conv2d_same(m_tilde, kernel)
        if circuit_model == ModelImpl.MSCE:
            a_hat, stage = restore_theory_msce(a_tilde, m_tilde, kernel)
        else:
            a_hat, stage = restore_tsc(a_tilde, m_tilde, kernel, size)
        theory = {
            "A_conv": a_conv,
            "M_conv": m_conv,
            "M_conv_zero2one": np.where(m_conv == 0, 1.0, m_conv),
            "N": stage.n,
            "M_A": stage.noisy_map.astype(np.float64),
            "F_M": stage.reliability,
            "A_hat": a_hat,
        }

        monitor = CircuitMonitor()
        pairs = stage_pairs(kernel, self.params.circuit, self.params.device)
        signals = WindowSignals(extract_windows(a_tilde, size), extract_windows(m_tilde, size))
        nodes = window_nodes(signals, pairs, size, circuit_model, self.params.circuit, self.params.device, monitor)
        circuit = {
            "A_conv": nodes["A_conv"],
            "M_conv": nodes["M_conv"],
            "M_conv_zero2one": nodes["M_conv_zero2one"],
            "N": nodes["N"],
            "M_A": nodes["M_A_center"],
            "F_M": np.broadcast_to(nodes["F_M"], a_tilde.shape),
            "A_hat": nodes["output"],
        }

        deltas = {name: float(np.max(np.abs(theory[name] - circuit[name]), initial=0.0)) for name in TRACE_NODES}
        report = TraceReport(
            model=model,
            kernel=kernel.array.tolist(),
            size=size,
            input=a_tilde.tolist(),
            theory={name: np.asarray(theory[name], dtype=np.float64).tolist() for name in TRACE_NODES},
            circuit={name: np.asarray(circuit[name], dtype=np.float64).tolist() for name in TRACE_NODES},
            deltas=deltas,
            agree=all(delta <= 1e-6 for delta in deltas.values()),
            divergence=monitor.to_counters(),
        )
        logger.debug("[Trace] max node delta %.3e", max(deltas.values()))
        return report

    def power(self) -> Dict[str, Any]:
        """Per-input tables, the 100x100 image table and programming totals for the configured kernel."""
        power_params = self.params.power
        kernel = get_kernel(power_params.kernel)
        if not kernel.is_ternary:
            kernel = ternarize(kernel)
        basis = MeanBasis(power_params.mean_basis)

        profiles = {m.value: kernel_power_profile(kernel, m, basis, self.params.device) for m in CIRCUIT_MODELS}
        rows = [row for m in CIRCUIT_MODELS for row in power_rows(m, self.params.device)]
        per_image = image_power_table(kernel, power_params.n_pixels, published.IMAGE_DENSITIES, basis,
                                      self.params.device)
        ratios = [msce / msc if msc > 0 else 0.0 for msce, msc in zip(per_image["MSCE"], per_image["MSC"])]

        nonzero_pairs, zero_pairs = pair_counts(kernel)
        devices = 2 * (nonzero_pairs + zero_pairs)
        result = program_constant(MemristorDevice.at_lrs(self.params.device), power_params.programming_voltage)
        oracle_per_device = result.mean_power * 1e6

        ratio = profiles["MSCE"].per_input_mean / profiles["MSC"].per_input_mean
        return {
            "kernel": power_params.kernel,
            "mean_basis": basis.value,
            "class_means": {name: profile.class_means for name, profile in profiles.items()},
            "per_input_mean": {name: profile.per_input_mean for name, profile in profiles.items()},
            "kernel_total": {name: profile.kernel_total for name, profile in profiles.items()},
            "per_input": [row.to_dict() for row in rows],
            "per_image": {
                "n_pixels": power_params.n_pixels,
                "densities": published.IMAGE_DENSITIES,
                "watts": per_image,
                "published": published.IMAGE_POWER_W,
                "msce_over_msc": ratios,
            },
            "msce_over_msc": ratio,
            "reduction_percent": (1.0 - ratio) * 100,
            "programming": {
                "devices": devices,
                "voltage": power_params.programming_voltage,
                "switch_time": result.switch_time,
                "energy": result.energy,
                "published_per_device": power_params.per_device_programming,
                "published_total": programming_power_total(devices, power_params.per_device_programming),
                "printed_total": published.PROGRAMMING_TOTAL_UW,
                "oracle_per_device": oracle_per_device,
                "oracle_total": programming_power_total(devices, oracle_per_device),
            },
            "flags": [f"{row.weight_class} {row.model}: {flag}" for row in rows for flag in row.flags],
            "config": self.params.to_dict(),
        }
