"""
The command-line experiments. Each command takes the effective RunParams,
writes its artifacts under ``output_dir`` and returns the written paths.
"""

import hashlib
import os
from typing import Any, Dict, List, Optional

import numpy as np

from modules.experiments.config import save_run_params
from modules.experiments.reports import json_safe, power_text, per_input_csv, image_power_csv, to_csv
from modules.experiments.service import DenoiseService
from modules.image.corpus import image_set, verify_corpus
from modules.image.noise import inject_sap, mask_to_coordinates, mask_to_pgm_grid
from modules.image.pgm import load_pgm, save_pgm
from modules.image.tensor_ops import crop, normalize
from modules.power.power_model import PowerRow
from modules.quantize.kernels import load_weights, save_weights
from modules.quantize.ternary import map_conductance, ternarize, threshold
from modules.seconv.data_classes import (RunParams, NoiseParams, ModelImpl, ReportFormat, PgmFormat, CropPolicy,
                                         TraceReport, WeightMode)
from modules.utils.errors import ConfigError
from modules.utils.files_manager import read_bytes, read_json, write_bytes, write_json, write_text
from modules.utils.logger import get_logger

logger = get_logger()


def _stem(path: Optional[str], default: str = "image") -> str:
    if not path:
        return default
    return os.path.splitext(os.path.basename(path))[0]


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _require_input(params: RunParams) -> str:
    if not params.input:
        raise ConfigError("This command needs an input image (--input)")
    return params.input


def load_image(params: RunParams, path: Optional[str] = None) -> np.ndarray:
    """Load a PGM and apply the configured crop."""
    image = load_pgm(read_bytes(path or _require_input(params)))
    if params.crop_size:
        image = crop(image, params.crop_size, CropPolicy(params.crop_policy), params.noise.seed)
    return image


def load_tensor(path: str) -> np.ndarray:
    """A normalized tensor from JSON (a nested list, or {"tensor": ...}) or from a PGM."""
    if path.lower().endswith(".json"):
        doc = read_json(path)
        grid = np.asarray(doc["tensor"] if isinstance(doc, dict) else doc, dtype=np.float64)
        if grid.ndim != 2:
            raise ConfigError(f"Tensor file must hold a 2-D grid: {path}")
        if grid.min(initial=0.0) < 0.0 or grid.max(initial=0.0) > 1.0:
            raise ConfigError(f"Tensor values must lie in [0, 1]: {path}")
        return grid
    return normalize(load_pgm(read_bytes(path)))


def corpus_images(params: RunParams) -> List[np.ndarray]:
    if params.input:
        return [load_image(params)]
    verify_corpus()
    experiments = params.experiments
    return image_set(experiments.image_count, experiments.image_size, experiments.corpus_image,
                     experiments.base_seed)


def _write_report(data: Dict[str, Any], rows: List[Dict[str, Any]], text: str, prefix: str,
                  report_format: ReportFormat) -> str:
    report_format = ReportFormat(report_format)
    if report_format == ReportFormat.CSV:
        return write_text(to_csv(rows), f"{prefix}.csv")
    if report_format == ReportFormat.TEXT:
        return write_text(text, f"{prefix}.txt")
    return write_json(json_safe(data), f"{prefix}.json")


def cmd_add_noise(params: RunParams) -> Dict[str, str]:
    """Noisy PGM, ground-truth mask as PGM and as coordinates, and a provenance record."""
    path = _require_input(params)
    raw = read_bytes(path)
    clean = load_image(params)
    noisy, mask = inject_sap(clean, params.noise)
    pgm_format = PgmFormat(params.pgm_format)

    prefix = os.path.join(params.output_dir, _stem(path))
    noisy_bytes = save_pgm(noisy, pgm_format)
    outputs = {
        "noisy": write_bytes(noisy_bytes, f"{prefix}_noisy.pgm"),
        "mask": write_bytes(save_pgm(mask_to_pgm_grid(mask), pgm_format), f"{prefix}_mask.pgm"),
        "mask_coordinates": write_json(mask_to_coordinates(mask), f"{prefix}_mask.json"),
    }
    provenance = {
        "input": path,
        "input_sha256": _sha256(raw),
        "noisy_sha256": _sha256(noisy_bytes),
        "crop_size": params.crop_size,
        "crop_policy": CropPolicy(params.crop_policy).value,
        "noise": params.noise.to_dict(),
        "corrupted_count": int(mask.sum()),
        "config": params.to_dict(),
    }
    outputs["provenance"] = write_json(provenance, f"{prefix}_provenance.json")
    logger.info("Corrupted %d of %d pixels (D=%g, seed=%d) -> %s",
                int(mask.sum()), mask.size, params.noise.density, params.noise.seed, outputs["noisy"])
    return outputs


def params_from_provenance(params: RunParams, provenance_path: str) -> RunParams:
    """Reapply the input, crop and noise settings recorded by add-noise."""
    provenance = read_json(provenance_path)
    try:
        update = {
            "input": provenance["input"],
            "noise": NoiseParams(**provenance["noise"]),
            "crop_size": provenance.get("crop_size"),
            "crop_policy": provenance.get("crop_policy", CropPolicy.CENTER.value),
        }
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"Provenance file is incomplete ({e}): {provenance_path}") from e
    checksum = provenance.get("input_sha256")
    if checksum and checksum != _sha256(read_bytes(update["input"])):
        raise ConfigError(f"Input {update['input']} changed since the provenance record was written")
    return params.model_copy(update=update)


def cmd_denoise(params: RunParams,
                provenance_path: Optional[str] = None,
                reference_path: Optional[str] = None) -> Dict[str, Any]:
    """
    Restore one image with the configured model and write the restored PGM
    and a DenoiseReport. With ``reference_path`` the input is taken as
    already noisy; otherwise it is the clean image and noise is injected
    from the configured seed.
    """
    if provenance_path:
        params = params_from_provenance(params, provenance_path)
    service = DenoiseService(params)
    model = ModelImpl(params.model)

    if reference_path:
        noisy = load_image(params)
        clean = load_image(params, reference_path)
        if clean.shape != noisy.shape:
            raise ConfigError(f"Reference {reference_path} has shape {clean.shape}, input has {noisy.shape}")
        restored, report, result = service.evaluate(clean, noisy, model, params.noise)
    else:
        clean = load_image(params)
        noisy, _ = inject_sap(clean, params.noise)
        restored, report, result = service.evaluate(clean, noisy, model, params.noise)
    logger.info("[%s] PSNR %.2f dB, SSIM %.4f, restored %d of %d noisy pixels", model.value, report.psnr,
                report.ssim, report.restored_pixel_count, report.noisy_pixel_count)

    prefix = os.path.join(params.output_dir, f"{_stem(params.input)}_{model.value}")
    outputs: Dict[str, Any] = {
        "restored": write_bytes(save_pgm(restored, PgmFormat(params.pgm_format)), f"{prefix}_restored.pgm"),
    }
    text = service.stats_generator.generate_report(
        service.stats_generator.analyze_results([report]), title="DENOISING REPORT"
    )
    outputs["report"] = _write_report(report.to_dict(), [report.to_row()], text, f"{prefix}_report",
                                      params.report_format)
    outputs["stages"] = write_json([trace.to_json_dict(include_maps=True) for trace in result.traces],
                                   f"{prefix}_stages.json")
    outputs["denoise_report"] = report
    return outputs


def cmd_sweep(params: RunParams, densities: Optional[List[float]] = None) -> Dict[str, Any]:
    service = DenoiseService(params)
    images = corpus_images(params)
    reports = service.sweep(images, densities)
    stats = service.stats_generator
    analysis = stats.analyze_results(reports)
    text = stats.generate_report(analysis)
    rows = [report.to_row() for report in reports]

    prefix = os.path.join(params.output_dir, "sweep")
    outputs: Dict[str, Any] = {
        "report": _write_report(stats.generate_json_report(analysis, rows, params.to_dict()), rows, text, prefix,
                                params.report_format),
        "summary": write_text(text, f"{prefix}_summary.txt"),
        "plot_data": write_text(stats.sweep_csv(reports), f"{prefix}_plot.csv"),
        "config": save_run_params(params, f"{prefix}_config.yaml"),
        "reports": reports,
    }
    return outputs


def cmd_ablation(params: RunParams) -> Dict[str, Any]:
    """Differential pairs against single memristors at the ablation density."""
    service = DenoiseService(params)
    experiments = params.experiments
    images = corpus_images(params)
    report = service.ablation(images)

    rows = [
        {
            "seed": seed,
            "differential_psnr": report.differential_psnr[i],
            "single_psnr": report.single_psnr[i],
            "differential_ssim": report.differential_ssim[i],
            "single_ssim": report.single_ssim[i],
        }
        for i, seed in enumerate(report.seeds)
    ]
    prefix = os.path.join(params.output_dir, f"ablation_{experiments.ablation_kernel}")
    text = service.stats_generator.ablation_text(report)
    return {
        "report": _write_report(report.to_dict(), rows, text, prefix, params.report_format),
        "summary": write_text(text, f"{prefix}_summary.txt"),
        "plot_data": write_text(to_csv(rows), f"{prefix}_plot.csv"),
        "ablation_report": report,
    }


def cmd_power(params: RunParams) -> Dict[str, Any]:
    """Per-input and per-image power tables with flags for published values the model does not reproduce."""
    service = DenoiseService(params)
    power = service.power()
    rows = [PowerRow(**row) for row in power["per_input"]]

    out = params.output_dir
    return {
        "per_input": write_text(per_input_csv(rows, power["class_means"]), os.path.join(out, "power_per_input.csv")),
        "per_image": write_text(image_power_csv(power["per_image"]["watts"]),
                                os.path.join(out, "power_per_image.csv")),
        "json": write_json(json_safe(power), os.path.join(out, "power.json")),
        "summary": write_text(power_text(power), os.path.join(out, "power_summary.txt")),
        "power": power,
    }


def cmd_trace(params: RunParams, tensor_path: Optional[str] = None) -> Dict[str, Any]:
    """Theory and circuit intermediates of one small tensor, node by node."""
    path = tensor_path or _require_input(params)
    service = DenoiseService(params)
    report: TraceReport = service.trace(load_tensor(path))
    output = write_json(report.to_dict(), os.path.join(params.output_dir, f"{_stem(path)}_trace.json"))
    if not report.agree:
        logger.warning("Theory and circuit disagree on %s",
                       ", ".join(name for name, delta in report.deltas.items() if delta > report.tolerance))
    return {"trace": output, "trace_report": report}


def cmd_quantize(params: RunParams, weights_path: Optional[str] = None) -> Dict[str, Any]:
    """Ternarize a full-precision weight file; write the ternary file, theta and the conductance map."""
    path = weights_path or params.weights
    if not path:
        raise ConfigError("quantize needs a weight file (--weights)")
    kernel = load_weights(read_bytes(path))
    ternary = kernel if kernel.is_ternary else ternarize(kernel)
    theta = threshold(kernel)

    prefix = os.path.join(params.output_dir, _stem(path))
    outputs: Dict[str, Any] = {"weights": write_bytes(save_weights(ternary), f"{prefix}_ternary.json")}
    pairs = map_conductance(ternary, params.device, params.circuit.weight_mode)
    conductance = {
        "theta": theta,
        "weight_mode": WeightMode(pairs.mode).value,
        "g_plus": pairs.g_plus.tolist(),
        "g_minus": pairs.g_minus.tolist(),
        "counts": {"nonzero": ternary.counts()[0], "zero": ternary.counts()[1]},
    }
    outputs["conductance"] = write_json(conductance, f"{prefix}_conductance.json")
    logger.info("Ternarized %s with theta %.6g", path, theta)
    outputs["kernel"] = ternary
    return outputs
