"""
Test the power model against the published tables, and the image metrics.
"""

import math

import numpy as np
import pytest

from modules.power import published
from modules.power.metrics import psnr, ssim, gaussian_window
from modules.power.power_model import (WeightClass, pair_power, input_power, power_rows, kernel_power_profile,
                                       image_power, image_power_table, programming_power_total, power_breakdown)
from modules.quantize.kernels import get_kernel
from modules.seconv.data_classes import ModelImpl, MeanBasis, Billing
from modules.utils.errors import ConfigError
from test_config import *

CIRCUIT_MODELS = [ModelImpl.MSC, ModelImpl.MSCE]


def reference_ssim(x: np.ndarray, y: np.ndarray) -> float:
    """Window-by-window SSIM over the valid region."""
    x = x.astype(np.float64)
    y = y.astype(np.float64)
    w = gaussian_window()
    c1, c2 = (0.01 * 255) ** 2, (0.03 * 255) ** 2
    values = []
    for i in range(x.shape[0] - 10):
        for j in range(x.shape[1] - 10):
            px, py = x[i:i + 11, j:j + 11], y[i:i + 11, j:j + 11]
            mx, my = (w * px).sum(), (w * py).sum()
            vx = (w * (px - mx) ** 2).sum()
            vy = (w * (py - my) ** 2).sum()
            cxy = (w * (px - mx) * (py - my)).sum()
            values.append((2 * mx * my + c1) * (2 * cxy + c2) / ((mx ** 2 + my ** 2 + c1) * (vx + vy + c2)))
    return float(np.mean(values))


class TestPerInputTable:
    """Test the per-input power rows against the published cells."""

    def test_pair_power(self):
        assert pair_power(1.0, WeightClass.ZERO) == pytest.approx(2.0)
        assert pair_power(1.0, WeightClass.NONZERO) == pytest.approx(101.0)
        assert pair_power(0.5, WeightClass.NONZERO) == pytest.approx(25.25)

    def test_msc_adds_the_fixed_kernel_pair(self):
        msc = input_power(0.3, 1.0, WeightClass.ZERO, ModelImpl.MSC)
        msce = input_power(0.3, 1.0, WeightClass.ZERO, ModelImpl.MSCE)
        assert msc - msce == pytest.approx(101.0)

    def test_ideal_models_have_no_power(self):
        with pytest.raises(ConfigError):
            input_power(0.5, 1.0, WeightClass.ZERO, ModelImpl.TSC)

    def test_cells_match_except_flagged(self):
        matched, flagged = 0, 0
        for model in CIRCUIT_MODELS:
            for row in power_rows(model):
                for v, cell, printed in zip(row.voltages, row.cells, row.published_cells):
                    note = published.flag_note(row.weight_class, row.model, v)
                    if note is None:
                        assert cell == pytest.approx(printed, abs=TEST_TABLE_TOLERANCE)
                        matched += 1
                    else:
                        assert cell == pytest.approx(printed - 1.0, abs=TEST_TABLE_TOLERANCE)
                        flagged += 1
        assert (matched, flagged) == (34, 2)

    def test_flags_carry_both_values(self):
        rows = {(row.weight_class, row.model): row for m in CIRCUIT_MODELS for row in power_rows(m)}
        msce = rows[("1/-1", "MSCE")]
        assert any("103.01" in flag and "102.01" in flag for flag in msce.flags)
        assert any(flag.startswith("mean:") for flag in rows[("0", "MSC")].flags)
        assert len(rows[("1/-1", "MSC")].flags) == 1

    def test_model_means_of_weight_zero_rows(self):
        rows = {(row.weight_class, row.model): row for m in CIRCUIT_MODELS for row in power_rows(m)}
        assert rows[("0", "MSC")].mean == pytest.approx(103.63, abs=TEST_TABLE_TOLERANCE)
        assert rows[("0", "MSCE")].mean == pytest.approx(2.63, abs=TEST_TABLE_TOLERANCE)
        assert rows[("0", "MSCE")].published_mean == 2.36


class TestKernelProfile:
    """Test kernel means, published totals and the image table."""

    @pytest.mark.parametrize("model", ["MSC", "MSCE"])
    def test_published_totals(self, model):
        profile = kernel_power_profile(get_kernel("fixture5"), model)
        assert profile.kernel_total == pytest.approx(published.KERNEL_TOTALS[model], abs=0.05)
        assert profile.per_input_mean == pytest.approx(published.PER_INPUT_MEANS[model], abs=TEST_TABLE_TOLERANCE)
        assert (profile.n_nonzero, profile.n_zero) == (5, 4)

    def test_model_basis(self):
        profile = kernel_power_profile(get_kernel("fixture5"), ModelImpl.MSCE, MeanBasis.MODEL)
        assert MeanBasis(profile.mean_basis) == MeanBasis.MODEL
        assert profile.per_input_mean == pytest.approx(75.05, abs=TEST_TABLE_TOLERANCE)

    def test_image_table_reproduces_published(self):
        table = image_power_table(get_kernel("fixture5"))
        for model, cells in table.items():
            assert len(cells) == 8
            for watts, printed in zip(cells, published.IMAGE_POWER_W[model]):
                assert round(watts, 2) == pytest.approx(printed, abs=1e-9)

    def test_ratio_is_density_independent(self):
        table = image_power_table(get_kernel("fixture5"))
        ratios = [msce / msc for msce, msc in zip(table["MSCE"], table["MSC"])]
        for ratio in ratios:
            assert ratio == pytest.approx(ratios[0], abs=1e-12)
        assert ratios[0] == pytest.approx(0.426, abs=1e-3)

    def test_headline_reduction_is_the_rounded_cells(self):
        reduction = (1 - published.IMAGE_POWER_W["MSCE"][0] / published.IMAGE_POWER_W["MSC"][0]) * 100
        assert round(reduction, 1) == published.REDUCTION_PERCENT

    def test_first_cell(self):
        watts = image_power(10_000, 0.1, get_kernel("fixture5"), ModelImpl.MSC)
        assert watts == pytest.approx(1.58, abs=0.005)

    def test_window_billing(self):
        kernel = get_kernel("fixture5")
        pixel = image_power(10_000, 0.2, kernel, ModelImpl.MSCE)
        window = image_power(10_000, 0.2, kernel, ModelImpl.MSCE, billing=Billing.WINDOW)
        assert window == pytest.approx(9 * pixel)

    @pytest.mark.parametrize("n_pixels,density", [(-1, 0.1), (100, 1.5)])
    def test_invalid_image(self, n_pixels, density):
        with pytest.raises(ConfigError):
            image_power(n_pixels, density, get_kernel("fixture5"), ModelImpl.MSC)

    def test_fully_noisy_image_draws_nothing(self):
        assert image_power(10_000, 1.0, get_kernel("fixture5"), ModelImpl.MSC) == 0.0


class TestProgrammingPower:
    """Test programming totals."""

    def test_published_total(self):
        nonzero, zero = 10, 8
        devices = 2 * (nonzero + zero)
        assert devices == published.PROGRAMMED_DEVICES
        assert programming_power_total(devices, published.PROGRAMMING_PER_DEVICE_UW) == pytest.approx(565.2)

    def test_closed_form_total(self):
        assert programming_power_total(36, 18.6) == pytest.approx(669.6)

    def test_negative_count(self):
        with pytest.raises(ConfigError):
            programming_power_total(-1, 15.7)

    def test_breakdown(self):
        breakdown = power_breakdown(get_kernel("fixture5"), ModelImpl.MSCE, 0.1, 10_000)
        assert breakdown.programming_total == pytest.approx(565.2)
        assert breakdown.per_image == pytest.approx(0.675, abs=0.001)
        assert breakdown.per_pair["0@0.5"] == pytest.approx(0.5)
        assert "op-amps" in breakdown.scope


class TestMetrics:
    """Test PSNR and SSIM."""

    def test_psnr_single_pixel(self):
        reference = np.zeros((10, 10), dtype=np.uint8)
        test = reference.copy()
        test[3, 3] = 1
        assert psnr(reference, test) == pytest.approx(68.13, abs=0.01)

    def test_psnr_identical(self):
        image = corpus()[0]
        assert math.isinf(psnr(image, image))

    def test_psnr_shape_mismatch(self):
        with pytest.raises(ConfigError):
            psnr(np.zeros((4, 4)), np.zeros((4, 5)))

    def test_ssim_identical(self):
        image = corpus()[0]
        assert ssim(image, image) == pytest.approx(1.0)

    def test_ssim_matches_window_by_window(self):
        rng = np.random.default_rng(5)
        x = rng.integers(0, 256, size=(16, 18)).astype(np.uint8)
        y = np.clip(x.astype(int) + rng.integers(-30, 30, size=x.shape), 0, 255).astype(np.uint8)
        assert ssim(x, y) == pytest.approx(reference_ssim(x, y), abs=1e-6)

    def test_ssim_drops_with_noise(self):
        image = corpus()[0]
        noisy = image.copy()
        noisy[::3, ::3] = 0
        assert ssim(image, noisy) < 0.9

    def test_psnr_falls_as_more_pixels_are_corrupted(self):
        rng = np.random.default_rng(11)
        image = rng.integers(20, 236, size=(24, 24)).astype(np.uint8)
        order = rng.permutation(image.size)
        scores = []
        for count in (1, 10, 50, 200, 576):
            corrupted = image.copy().reshape(-1)
            corrupted[order[:count]] = 0
            scores.append(psnr(image, corrupted.reshape(image.shape)))
        assert all(a > b for a, b in zip(scores, scores[1:])), scores

    def test_ssim_against_negative(self):
        image = corpus()[0]
        negative = (255 - image.astype(np.int32)).astype(np.uint8)
        assert ssim(image, negative) < 1.0
        assert ssim(image, negative) < ssim(image, image)

    def test_ssim_too_small(self):
        with pytest.raises(ConfigError):
            ssim(np.zeros((8, 8)), np.zeros((8, 8)))

    def test_gaussian_window(self):
        window = gaussian_window()
        assert window.shape == (11, 11)
        assert window.sum() == pytest.approx(1.0)
        assert window[5, 5] == window.max()
