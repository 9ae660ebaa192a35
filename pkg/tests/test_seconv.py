"""
Test the ideal selective-convolution arithmetic and the stage cascade.
"""

import numpy as np
import pytest

from modules.image.tensor_ops import nonnoisy_mask
from modules.quantize.kernels import get_kernel
from modules.seconv.data_classes import StagePlan, StageParams, ModelImpl, ReliabilityRule, FULL_CASCADE_SIZES
from modules.seconv.reference import (conv2d_same, fixed_conv, restore_tsc, restore_theory_msce, cascade,
                                      resolve_stage_kernel)
from modules.utils.errors import ConfigError
from test_config import *


def brute_force_conv(grid: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Zero-padded cross-correlation by direct summation over kernel taps."""
    half = kernel.shape[0] // 2
    padded = np.pad(grid, half)
    out = np.zeros_like(grid, dtype=np.float64)
    for dy in range(kernel.shape[0]):
        for dx in range(kernel.shape[1]):
            out += kernel[dy, dx] * padded[dy:dy + grid.shape[0], dx:dx + grid.shape[1]]
    return out


class TestConvolution:
    """Test conv2d_same against a direct-summation oracle."""

    def test_small_example(self):
        grid = np.arange(9, dtype=np.float64).reshape(3, 3)
        out = conv2d_same(grid, np.ones((3, 3)))

        assert out[1, 1] == 36.0
        assert out[0, 0] == 0 + 1 + 3 + 4

    def test_cross_correlation_not_convolution(self):
        grid = np.zeros((3, 3))
        grid[1, 1] = 1.0
        kernel = np.arange(9, dtype=np.float64).reshape(3, 3)
        # an impulse picks up the kernel flipped
        np.testing.assert_array_equal(conv2d_same(grid, kernel), kernel[::-1, ::-1])

    @pytest.mark.slow
    def test_exhaustive_shapes(self):
        rng = np.random.default_rng(0)
        cases = 0
        for height in range(1, 9):
            for width in range(1, 9):
                for size in (1, 3, 5, 7):
                    for trial in range(40):
                        grid = rng.random((height, width))
                        if trial % 2:
                            kernel = rng.integers(-1, 2, size=(size, size)).astype(np.float64)
                        else:
                            kernel = rng.normal(size=(size, size))
                        np.testing.assert_allclose(conv2d_same(grid, kernel), brute_force_conv(grid, kernel),
                                                   rtol=0, atol=1e-12)
                        cases += 1
        assert cases >= 10_000

    @pytest.mark.parametrize("workers", [2, 3, 5])
    def test_row_bands_are_bit_identical(self, workers):
        grid = sap_tensor((23, 17), 0.3, seed=workers)
        kernel = get_kernel("fixture5")
        np.testing.assert_array_equal(conv2d_same(grid, kernel, workers=workers), conv2d_same(grid, kernel))

    def test_even_kernel_rejected(self):
        with pytest.raises(ConfigError):
            conv2d_same(np.zeros((4, 4)), np.ones((2, 2)))
        with pytest.raises(ConfigError):
            fixed_conv(np.zeros((4, 4)), 4)


class TestRestoreTsc:
    """Test the thresholded-reliability restoration."""

    def test_only_noisy_pixels_change(self):
        a_tilde = sap_tensor((12, 12), 0.3, seed=1)
        a_hat, trace = restore_tsc(a_tilde, nonnoisy_mask(a_tilde), np.ones((3, 3)))
        clean = a_tilde != 0
        np.testing.assert_array_equal(a_hat[clean], a_tilde[clean])
        assert not trace.restored[clean].any()

    def test_n_is_mean_of_clean_neighbours(self):
        a_tilde = sap_tensor((10, 10), 0.4, seed=2)
        m_tilde = nonnoisy_mask(a_tilde)
        a_hat, trace = restore_tsc(a_tilde, m_tilde, np.ones((3, 3)))
        padded = np.pad(a_tilde, 1)
        padded_mask = np.pad(m_tilde, 1)
        for y, x in zip(*np.nonzero(trace.restored)):
            values = padded[y:y + 3, x:x + 3][padded_mask[y:y + 3, x:x + 3] == 1]
            assert a_hat[y, x] == pytest.approx(values.mean(), abs=1e-12)

    def test_fully_noisy_image_is_left_alone(self):
        a_tilde = np.zeros((6, 6))
        a_hat, trace = restore_tsc(a_tilde, nonnoisy_mask(a_tilde), np.ones((3, 3)))
        np.testing.assert_array_equal(a_hat, a_tilde)
        assert trace.restored_count == 0
        assert not trace.reliability.any()

    def test_reliability_threshold(self):
        # a 5x5 stage needs eta = 3 clean pixels in the window
        a_tilde = np.zeros((5, 5))
        a_tilde[0, 0] = a_tilde[0, 1] = 0.5
        _, two = restore_tsc(a_tilde, nonnoisy_mask(a_tilde), np.ones((5, 5)))
        a_tilde[0, 2] = 0.5
        _, three = restore_tsc(a_tilde, nonnoisy_mask(a_tilde), np.ones((5, 5)))
        assert two.reliability[2, 2] == 0.0
        assert three.reliability[2, 2] == 1.0

    def test_always_one_rule(self):
        a_tilde = np.zeros((5, 5))
        a_tilde[0, 0] = 0.5
        _, trace = restore_tsc(a_tilde, nonnoisy_mask(a_tilde), np.ones((5, 5)),
                               reliability_rule=ReliabilityRule.ALWAYS_ONE)
        assert trace.reliability.all()
        assert trace.restored[2, 2]

    def test_negative_denominator_keeps_its_sign(self):
        a_tilde = np.zeros((3, 3))
        a_tilde[1, 2] = 0.6
        kernel = np.array([[0, 0, 0], [0, 1, -1], [0, 0, 0]], dtype=np.float64)
        _, trace = restore_tsc(a_tilde, nonnoisy_mask(a_tilde), kernel, size=3)
        # A_conv = -0.6, M_conv = -1
        assert trace.n[1, 1] == pytest.approx(0.6)


class TestRestoreTheoryMsce:
    """Test the zero-to-one formulation."""

    def test_zero_denominator_becomes_one(self):
        a_tilde = np.zeros((3, 3))
        a_hat, trace = restore_theory_msce(a_tilde, nonnoisy_mask(a_tilde), np.ones((3, 3)))
        np.testing.assert_array_equal(trace.n, 0.0)
        np.testing.assert_array_equal(a_hat, a_tilde)

    @pytest.mark.parametrize("density", [0.6, 0.7, 0.8])
    def test_restores_a_superset_of_tsc(self, density):
        kernel = np.ones((5, 5))
        for seed in TEST_SEEDS:
            a_tilde = sap_tensor((16, 16), density, seed)
            m_tilde = nonnoisy_mask(a_tilde)
            _, tsc = restore_tsc(a_tilde, m_tilde, kernel)
            _, msce = restore_theory_msce(a_tilde, m_tilde, kernel)
            assert not np.any(tsc.restored & ~msce.restored)

    def test_agrees_with_tsc_where_tsc_restores(self):
        a_tilde = sap_tensor((16, 16), 0.5, seed=4)
        m_tilde = nonnoisy_mask(a_tilde)
        tsc_hat, tsc = restore_tsc(a_tilde, m_tilde, get_kernel("fixture5"))
        msce_hat, _ = restore_theory_msce(a_tilde, m_tilde, get_kernel("fixture5"))
        np.testing.assert_allclose(msce_hat[tsc.restored], tsc_hat[tsc.restored], atol=1e-12)


class TestCascade:
    """Test stage plans."""

    def test_single_stage_equals_one_call(self):
        a_tilde = sap_tensor((12, 12), 0.3, seed=5)
        a_hat, traces = cascade(a_tilde, StagePlan(), ModelImpl.TSC)
        direct, _ = restore_tsc(a_tilde, nonnoisy_mask(a_tilde), np.ones((3, 3)))
        np.testing.assert_array_equal(a_hat, direct)
        assert len(traces) == 1

    def test_more_stages_restore_more(self):
        for seed in TEST_SEEDS:
            a_tilde = sap_tensor((24, 24), 0.8, seed)
            _, single = cascade(a_tilde, StagePlan.from_sizes([3]))
            _, triple = cascade(a_tilde, StagePlan.from_sizes([3, 5, 7]))
            restored = np.zeros(a_tilde.shape, dtype=bool)
            for trace in triple:
                restored |= trace.restored
            assert restored.sum() >= single[0].restored.sum()

    def test_full_cascade_plan(self):
        plan = StagePlan.from_sizes(FULL_CASCADE_SIZES)
        assert plan.sizes == [3, 5, 7, 9, 11, 13, 15]
        assert plan.describe().startswith("3x3:ones3+5x5:ones5")
        a_hat, traces = cascade(sap_tensor((20, 20), 0.5, seed=0), plan)
        assert len(traces) == 7
        assert a_hat.shape == (20, 20)

    def test_stage_size_mismatch(self):
        plan = StagePlan(stages=[StageParams(size=5, kernel="ones3")])
        with pytest.raises(ConfigError):
            cascade(np.zeros((6, 6)), plan)

    def test_invalid_stage_parameters(self):
        with pytest.raises(ValueError):
            StageParams(size=4)
        with pytest.raises(ValueError):
            StageParams(size=1, kernel="ones1")

    def test_ternary_models_need_ternary_weights(self, tmp_path):
        path = tmp_path / "weights.json"
        path.write_text('{"size": 3, "precision": "full", "weights": [0.5, 0, 0, 0, 1, 0, 0, 0, 0.5]}')
        assert not resolve_stage_kernel(str(path), ModelImpl.FPSC).is_ternary
        assert resolve_stage_kernel(str(path), ModelImpl.TSC, quantize=True).is_ternary
        with pytest.raises(ConfigError):
            resolve_stage_kernel(str(path), ModelImpl.MSC, quantize=False)

    def test_fpsc_runs_full_precision(self, tmp_path):
        path = tmp_path / "weights.json"
        path.write_text('{"size": 3, "precision": "full", "weights": [0.5, 1, 0.5, 1, 2, 1, 0.5, 1, 0.5]}')
        plan = StagePlan(stages=[StageParams(size=3, kernel=str(path))])
        a_tilde = sap_tensor((10, 10), 0.2, seed=3)
        a_hat, traces = cascade(a_tilde, plan, ModelImpl.FPSC)
        restored = traces[0].restored
        assert restored.any()
        assert ((a_hat[restored] > 0) & (a_hat[restored] < 1)).all()
