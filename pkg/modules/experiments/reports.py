"""
Experiment statistics for denoising sweeps and power tables.

Produces published-table style CSV, full-precision JSON and a human-readable
text summary. Nothing time-dependent goes into a report, so reruns with the
same configuration write byte-identical files.
"""

import csv
import io
import math
from typing import Any, Dict, List, Optional

from modules.power import published
from modules.power.power_model import PowerRow, SCOPE_NOTE
from modules.seconv.data_classes import DenoiseReport, AblationReport, ModelImpl

FORMAT_VERSION = "1.0"


def _fmt(value: float, digits: int = 4) -> str:
    if isinstance(value, float) and math.isinf(value):
        return "inf"
    return f"{value:.{digits}f}"


def _finite_mean(values: List[float]) -> float:
    finite = [v for v in values if not math.isinf(v)]
    return float(sum(finite) / len(finite)) if finite else math.inf


def json_safe(data: Any) -> Any:
    """Replace infinities with the string "inf" so reports stay strict JSON."""
    if isinstance(data, dict):
        return {k: json_safe(v) for k, v in data.items()}
    if isinstance(data, (list, tuple)):
        return [json_safe(v) for v in data]
    if isinstance(data, float) and math.isinf(data):
        return "inf" if data > 0 else "-inf"
    return data


def to_csv(rows: List[Dict[str, Any]], fieldnames: Optional[List[str]] = None) -> str:
    if not rows:
        return ""
    fieldnames = fieldnames or list(rows[0].keys())
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=fieldnames, extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: ("inf" if isinstance(v, float) and math.isinf(v) else v) for k, v in row.items()})
    return buffer.getvalue()


class ExperimentStatistics:
    """Generate statistics and reports for denoising runs."""

    def analyze_results(self, reports: List[DenoiseReport]) -> Dict[str, Any]:
        """
        Group reports into model-by-density tables.

        Args:
            reports: One DenoiseReport per (model, density) cell

        Returns:
            Dictionary with psnr/ssim tables, the best model per density and
            restoration/divergence totals per model
        """
        models: List[str] = []
        densities: List[float] = []
        psnr_table: Dict[str, Dict[str, float]] = {}
        ssim_table: Dict[str, Dict[str, float]] = {}
        restored: Dict[str, int] = {}
        noisy: Dict[str, int] = {}
        divergence: Dict[str, Dict[str, int]] = {}

        for report in reports:
            model = ModelImpl(report.model).value
            key = f"{report.density:g}"
            if model not in models:
                models.append(model)
            if report.density not in densities:
                densities.append(report.density)
            psnr_table.setdefault(model, {})[key] = report.psnr
            ssim_table.setdefault(model, {})[key] = report.ssim
            restored[model] = restored.get(model, 0) + report.restored_pixel_count
            noisy[model] = noisy.get(model, 0) + report.noisy_pixel_count
            totals = divergence.setdefault(model, {})
            for name, value in report.divergence.to_dict().items():
                totals[name] = totals.get(name, 0) + value

        best = {}
        for density in densities:
            key = f"{density:g}"
            scored = [(psnr_table[m][key], m) for m in models if key in psnr_table[m]]
            best[key] = max(scored)[1] if scored else None

        return {
            "models": models,
            "densities": densities,
            "psnr": psnr_table,
            "ssim": ssim_table,
            "best_psnr_model": best,
            "restored_pixels": restored,
            "noisy_pixels": noisy,
            "restored_percentage": {
                m: (restored[m] / noisy[m] * 100) if noisy[m] > 0 else 0.0 for m in models
            },
            "divergence": divergence,
        }

    def generate_report(self, analysis: Dict[str, Any], title: str = "DENOISING SWEEP REPORT") -> str:
        """
        Generate a human-readable report.

        Args:
            analysis: Output of analyze_results

        Returns:
            Formatted report string
        """
        densities = [f"{d:g}" for d in analysis["densities"]]
        header = f"{'Model':<8}" + "".join(f"{d:>10}" for d in densities)
        report_lines = [
            "=" * 60,
            title,
            "=" * 60,
            "",
            "PSNR (dB)",
            "-" * 60,
            header,
        ]
        for model in analysis["models"]:
            cells = analysis["psnr"][model]
            report_lines.append(f"{model:<8}" + "".join(f"{_fmt(cells.get(d, math.nan), 2):>10}" for d in densities))

        report_lines.extend(["", "SSIM", "-" * 60, header])
        for model in analysis["models"]:
            cells = analysis["ssim"][model]
            report_lines.append(f"{model:<8}" + "".join(f"{_fmt(cells.get(d, math.nan), 4):>10}" for d in densities))

        report_lines.extend(["", "BEST MODEL BY PSNR", "-" * 60])
        for density, model in analysis["best_psnr_model"].items():
            report_lines.append(f"  D = {density}: {model}")

        report_lines.extend(["", "RESTORATION", "-" * 60])
        for model in analysis["models"]:
            report_lines.append(
                f"  {model}: {analysis['restored_pixels'][model]} of {analysis['noisy_pixels'][model]} "
                f"noisy pixels restored ({analysis['restored_percentage'][model]:.2f}%)"
            )

        circuit_models = [m for m in analysis["models"] if any(analysis["divergence"][m].values())]
        if circuit_models:
            report_lines.extend(["", "CIRCUIT DIVERGENCE", "-" * 60])
            for model in circuit_models:
                counters = ", ".join(f"{k}={v}" for k, v in sorted(analysis["divergence"][model].items()))
                report_lines.append(f"  {model}: {counters}")

        report_lines.append("=" * 60)
        return "\n".join(report_lines) + "\n"

    def generate_json_report(self, analysis: Dict[str, Any], rows: List[Dict[str, Any]],
                             config: Dict[str, Any]) -> Dict[str, Any]:
        return {
            "statistics": json_safe(analysis),
            "rows": rows,
            "config": config,
            "format_version": FORMAT_VERSION,
        }

    @staticmethod
    def sweep_csv(reports: List[DenoiseReport]) -> str:
        return to_csv([report.to_row() for report in reports])

    @staticmethod
    def ablation_text(report: AblationReport) -> str:
        lines = [
            "=" * 60,
            "WEIGHT MODE ABLATION",
            "=" * 60,
            f"Model: {ModelImpl(report.model).value}   Kernel: {report.kernel}   D = {report.density:g}",
            "",
            f"{'Seed':>6}{'PSNR diff':>12}{'PSNR single':>13}{'SSIM diff':>11}{'SSIM single':>13}",
        ]
        for i, seed in enumerate(report.seeds):
            lines.append(
                f"{seed:>6}{_fmt(report.differential_psnr[i], 2):>12}{_fmt(report.single_psnr[i], 2):>13}"
                f"{_fmt(report.differential_ssim[i]):>11}{_fmt(report.single_ssim[i]):>13}"
            )
        lines.extend([
            "",
            f"Differential wins on {report.differential_win_fraction * 100:.1f}% of images",
            f"Mean single - differential on restored pixels: {report.mean_single_minus_differential:+.6f}",
            f"Mean PSNR: differential {_fmt(_finite_mean(report.differential_psnr), 2)} dB, "
            f"single {_fmt(_finite_mean(report.single_psnr), 2)} dB",
            f"Mean single-mode value where the differential denominator is zero: {report.zero_denominator_bias:.6f}",
            f"Noisy pixels whose clean neighbours sit only on zero-weight taps: {report.zero_denominator_windows}",
            "  differential pairs cancel those taps exactly and restore the pixel to 0;",
            "  single devices leak G_OFF through them and restore the neighbour mean.",
            "=" * 60,
        ])
        return "\n".join(lines) + "\n"


def per_input_csv(rows: List[PowerRow], class_means: Optional[Dict[str, Dict[str, float]]] = None) -> str:
    """
    Per-input power (uW) laid out like the published table: weight class,
    model, one column per voltage, the mean, and any flags.
    """
    voltages = rows[0].voltages if rows else published.READ_VOLTAGES
    fieldnames = ["weight", "model"] + [f"{v:g}V" for v in voltages] + ["Mean", "published_Mean", "flags"]
    out = []
    for row in rows:
        model = ModelImpl(row.model).value
        entry = {"weight": row.weight_class, "model": model}
        entry.update({f"{v:g}V": f"{c:.2f}" for v, c in zip(voltages, row.cells)})
        mean = row.mean
        if class_means is not None:
            mean = class_means[model][row.weight_class]
        entry["Mean"] = f"{mean:.2f}"
        entry["published_Mean"] = f"{row.published_mean:.2f}" if row.published_mean is not None else ""
        entry["flags"] = "; ".join(row.flags)
        out.append(entry)
    return to_csv(out, fieldnames)


def image_power_csv(table: Dict[str, List[float]], densities: Optional[List[float]] = None) -> str:
    """Watts per 100x100 image, rounded to two decimals like the published table."""
    densities = densities or published.IMAGE_DENSITIES
    fieldnames = ["model"] + [f"{round(d * 100)}%" for d in densities]
    out = []
    for model, cells in table.items():
        entry = {"model": model}
        entry.update({f"{round(d * 100)}%": f"{w:.2f}" for d, w in zip(densities, cells)})
        out.append(entry)
    return to_csv(out, fieldnames)


def power_text(power: Dict[str, Any]) -> str:
    lines = [
        "=" * 60,
        "POWER ANALYSIS",
        "=" * 60,
        f"Kernel: {power['kernel']}   Mean basis: {power['mean_basis']}",
        f"Scope: {SCOPE_NOTE}",
        "",
        "PER-INPUT MEAN (uW)",
        "-" * 60,
    ]
    for model, value in power["per_input_mean"].items():
        lines.append(f"  {model}: {value:.2f}   window total {power['kernel_total'][model]:.2f}")
    lines.extend([
        "",
        f"MSCE / MSC ratio: {power['msce_over_msc']:.4f} (reduction {power['reduction_percent']:.1f}%, "
        f"published {published.REDUCTION_PERCENT}%)",
        "",
        "PROGRAMMING (uW)",
        "-" * 60,
        f"  devices: {power['programming']['devices']}",
        f"  published per device {power['programming']['published_per_device']:.1f} -> "
        f"total {power['programming']['published_total']:.1f} (printed {power['programming']['printed_total']:.1f})",
        f"  closed-form per device {power['programming']['oracle_per_device']:.2f} -> "
        f"total {power['programming']['oracle_total']:.1f}",
    ])
    if power["flags"]:
        lines.extend(["", "FLAGGED PUBLISHED VALUES", "-" * 60])
        lines.extend(f"  {flag}" for flag in power["flags"])
    lines.append("=" * 60)
    return "\n".join(lines) + "\n"