"""
Test the circuit blocks and the window/image simulation against the ideal arithmetic.
"""

import numpy as np
import pytest

from modules.circuit.blocks import (CircuitMonitor, crossbar_conv, rc_fixed_conv, signal_convert_zero2one,
                                    comparator_threshold, divider, inverter, multiplier, adder)
from modules.circuit.simulator import (WindowSignals, window_nodes, window_msc, window_msce, extract_windows,
                                       stage_pairs, denoise_image_circuit)
from modules.image.tensor_ops import nonnoisy_mask
from modules.quantize.kernels import Kernel, get_kernel
from modules.quantize.ternary import map_conductance
from modules.seconv.data_classes import (CircuitParams, DeviceParams, ModelImpl, Precision, StagePlan, StageParams,
                                         WeightMode)
from modules.seconv.reference import restore_tsc, restore_theory_msce, cascade
from modules.utils.errors import CircuitContractError, ConfigError
from test_config import *

EQUIVALENCE_TOLERANCE = 1e-6


def batched_windows(count: int, shape, size: int = 3):
    tensors = [sap_tensor(shape, density=(i % 9) / 10, seed=i) for i in range(count)]
    v = np.stack([extract_windows(t, size) for t in tensors])
    m = np.stack([extract_windows(nonnoisy_mask(t), size) for t in tensors])
    return tensors, WindowSignals(v, m)


class TestBlocks:
    """Test the node equations of each block."""

    def test_differential_crossbar_is_the_ternary_dot_product(self):
        rng = np.random.default_rng(0)
        kernel = get_kernel("fixture5")
        pairs = map_conductance(kernel)
        signals = rng.random((50, 9))
        np.testing.assert_allclose(crossbar_conv(signals, pairs), signals @ kernel.array.ravel(), atol=1e-12)

    def test_single_mode_leaks_through_zero_weights(self):
        kernel = Kernel.from_array([[1, 0, 0], [0, 0, 0], [0, 0, 0]], Precision.TERNARY)
        config = CircuitParams(weight_mode=WeightMode.SINGLE)
        pairs = map_conductance(kernel, mode=WeightMode.SINGLE)
        signals = np.linspace(0.1, 0.9, 9)

        single = float(crossbar_conv(signals, pairs, config))
        differential = float(crossbar_conv(signals, map_conductance(kernel)))
        assert single == pytest.approx(signals[0] + 0.01 * signals[1:].sum())
        assert differential == pytest.approx(signals[0])
        assert single - differential >= 0.01 * signals[1:].sum() - 1e-12

    def test_single_mode_without_zero_weights_matches_differential(self):
        kernel = get_kernel("ones3")
        signals = np.random.default_rng(1).random((20, 9))
        single = crossbar_conv(signals, map_conductance(kernel, mode=WeightMode.SINGLE),
                               CircuitParams(weight_mode=WeightMode.SINGLE))
        np.testing.assert_allclose(single, crossbar_conv(signals, map_conductance(kernel)), atol=1e-12)

    def test_rail_clamp_is_counted(self):
        monitor = CircuitMonitor()
        out = crossbar_conv(np.full((2, 9), 2.0), map_conductance(get_kernel("ones3")), monitor=monitor)
        np.testing.assert_allclose(out, 15.0)
        assert monitor.clamped_nodes == 2

    def test_rc_fixed_conv_counts(self):
        masks = np.array([[1, 1, 0, 0, 0, 0, 0, 0, 1], [0] * 9], dtype=np.float64)
        np.testing.assert_allclose(rc_fixed_conv(masks, 3), [3.0, 0.0], atol=1e-12)

    def test_zero_to_one(self):
        out = signal_convert_zero2one(np.array([-2.0, 0.0, 1e-12, 0.5, 3.0]))
        np.testing.assert_array_equal(out, [1.0, 1.0, 1.0, 0.5, 3.0])

    def test_zero_to_one_counts_absorbed_residues(self):
        monitor = CircuitMonitor()
        out = signal_convert_zero2one(np.array([0.0, 5e-10, 1e-9, 2e-9, -5e-10]), monitor=monitor)
        np.testing.assert_array_equal(out, [1.0, 1.0, 1.0, 2e-9, 1.0])
        assert monitor.absorbed_denominator_windows == 2
        assert monitor.to_counters().absorbed_denominator_windows == 2

    def test_zero_to_one_without_absorb_band(self):
        monitor = CircuitMonitor()
        out = signal_convert_zero2one(np.array([0.0, 5e-10]), CircuitParams(comparator_absorb=0.0), monitor)
        np.testing.assert_array_equal(out, [1.0, 5e-10])
        assert monitor.absorbed_denominator_windows == 0

    def test_comparator(self):
        out = comparator_threshold(np.array([0.0, 0.999999, 1.0 - 1e-12, 1.0, 4.0]), 1.0)
        np.testing.assert_array_equal(out, [0.0, 0.0, 1.0, 1.0, 1.0])

    def test_divider_contract(self):
        with pytest.raises(CircuitContractError):
            divider(1.0, 0.0)
        with pytest.raises(CircuitContractError):
            divider(np.array([1.0, 1.0]), np.array([1.0, -1.0]))

    def test_divider_floor(self):
        monitor = CircuitMonitor()
        out = float(divider(1e-8, 1e-9, monitor=monitor))
        assert out == pytest.approx(1e-2)
        assert monitor.floor_engagements == 1

    def test_arithmetic_blocks(self):
        assert inverter(1.0) == 0.0 and inverter(0.0) == 1.0
        assert float(multiplier(0.5, 0.25)) == pytest.approx(0.125)
        assert float(adder(0.5, 0.25)) == pytest.approx(0.75)
        assert adder(14.0, 3.0) == 15.0


class TestWindow:
    """Test single windows of the MSC and MSCE circuits."""

    def test_center_tap(self):
        signals = WindowSignals(np.zeros((4, 25)), np.zeros((4, 25)))
        assert signals.center == 12

    def test_restores_noisy_center(self):
        v = np.array([0.2, 0.4, 0.6, 0.3, 0.0, 0.5, 0.1, 0.7, 0.8])
        m = (v != 0).astype(np.float64)
        pairs = map_conductance(get_kernel("ones3"))
        expected = v.sum() / 8
        assert float(window_msc(WindowSignals(v, m), pairs, 3)) == pytest.approx(expected)
        assert float(window_msce(WindowSignals(v, m), pairs)) == pytest.approx(expected)

    def test_clean_center_passes_through(self):
        v = np.full(9, 0.4)
        m = np.ones(9)
        pairs = map_conductance(get_kernel("ones3"))
        assert float(window_msc(WindowSignals(v, m), pairs, 3)) == pytest.approx(0.4)

    def test_msce_ignores_reliability(self):
        # a single clean pixel in a 5x5 window: MSC gates it (eta = 3), MSCE restores
        v = np.zeros(25)
        v[0] = 0.5
        m = (v != 0).astype(np.float64)
        pairs = map_conductance(get_kernel("ones5"))
        assert window_msc(WindowSignals(v, m), pairs, 5) == 0.0
        assert float(window_msce(WindowSignals(v, m), pairs)) == pytest.approx(0.5)

    def test_signal_contract(self):
        with pytest.raises(CircuitContractError):
            WindowSignals(np.ones(9), np.full(9, 0.5)).validate()
        with pytest.raises(CircuitContractError):
            WindowSignals(np.ones(9), np.zeros(9)).validate()

    def test_negative_denominator_is_tagged(self):
        # fixture5 weighs the right neighbour -1; a window with only that neighbour clean goes negative
        v = np.zeros(9)
        v[5] = 0.6
        m = (v != 0).astype(np.float64)
        monitor = CircuitMonitor()
        nodes = window_nodes(WindowSignals(v[None], m[None]), map_conductance(get_kernel("fixture5")), 3,
                             ModelImpl.MSCE, monitor=monitor)
        assert nodes["M_conv"][0] == pytest.approx(-1.0)
        assert nodes["M_conv_zero2one"][0] == 1.0
        assert monitor.negative_denominator_windows == 1


class TestTheoryEquivalence:
    """Test the ideal-component circuit against the ideal arithmetic."""

    @pytest.mark.slow
    def test_msc_matches_tsc_on_1000_images(self):
        tensors, signals = batched_windows(1000, (10, 10))
        pairs = map_conductance(get_kernel("ones3"))
        monitor = CircuitMonitor()
        out = window_msc(signals, pairs, 3, monitor=monitor)
        for i, a_tilde in enumerate(tensors):
            expected, _ = restore_tsc(a_tilde, nonnoisy_mask(a_tilde), np.ones((3, 3)))
            assert np.max(np.abs(out[i] - expected)) <= EQUIVALENCE_TOLERANCE
        assert monitor.negative_denominator_windows == 0
        assert monitor.clamped_nodes == 0

    @pytest.mark.slow
    def test_msce_matches_theory_on_1000_images(self):
        tensors, signals = batched_windows(1000, (10, 10))
        out = window_msce(signals, map_conductance(get_kernel("ones3")))
        for i, a_tilde in enumerate(tensors):
            expected, _ = restore_theory_msce(a_tilde, nonnoisy_mask(a_tilde), np.ones((3, 3)))
            assert np.max(np.abs(out[i] - expected)) <= EQUIVALENCE_TOLERANCE

    @pytest.mark.parametrize("kernel_name", ["ones3", "cross3"])
    def test_image_level_matches_reference(self, kernel_name):
        plan = StagePlan(stages=[StageParams(size=3, kernel=kernel_name)])
        for seed in TEST_SEEDS[:4]:
            a_tilde = sap_tensor((20, 20), 0.3, seed)
            run = denoise_image_circuit(a_tilde, ModelImpl.MSC, plan)
            expected, traces = cascade(a_tilde, plan, ModelImpl.TSC)
            assert np.max(np.abs(run.a_hat - expected)) <= EQUIVALENCE_TOLERANCE
            np.testing.assert_array_equal(run.traces[0].restored, traces[0].restored)

    def test_cascade_of_circuit_stages(self):
        plan = StagePlan.from_sizes([3, 3])
        a_tilde = sap_tensor((16, 16), 0.7, seed=2)
        run = denoise_image_circuit(a_tilde, ModelImpl.MSCE, plan)
        expected, _ = cascade(a_tilde, plan, ModelImpl.MSCE)
        assert len(run.traces) == 2
        assert np.max(np.abs(run.a_hat - expected)) <= EQUIVALENCE_TOLERANCE


class TestImageDriver:
    """Test the image-level driver."""

    def test_workers_are_bit_identical(self):
        a_tilde = sap_tensor((21, 19), 0.5, seed=7)
        plan = StagePlan(stages=[StageParams(size=3, kernel="fixture5")])
        sequential = denoise_image_circuit(a_tilde, ModelImpl.MSC, plan, CircuitParams(workers=1))
        parallel = denoise_image_circuit(a_tilde, ModelImpl.MSC, plan, CircuitParams(workers=4))
        np.testing.assert_array_equal(sequential.a_hat, parallel.a_hat)
        assert sequential.divergence == parallel.divergence

    def test_rails_engage_on_large_windows(self):
        a_tilde = np.full((9, 9), 0.9)
        a_tilde[4, 4] = 0.0
        run = denoise_image_circuit(a_tilde, ModelImpl.MSC, StagePlan.from_sizes([7]))
        assert run.divergence.clamped_nodes > 0

    def test_stage_rejects_a_miswired_mask(self, monkeypatch):
        # a mask that marks every pixel noisy leaves clean pixel voltages under a 0 V mask
        monkeypatch.setattr("modules.circuit.simulator.nonnoisy_mask", lambda a: np.zeros_like(a))
        with pytest.raises(CircuitContractError, match="mask is 0 V"):
            denoise_image_circuit(sap_tensor((8, 8), 0.5, seed=2), ModelImpl.MSCE)

    def test_stage_rejects_fractional_mask(self, monkeypatch):
        monkeypatch.setattr("modules.circuit.simulator.nonnoisy_mask", lambda a: np.full(a.shape, 0.5))
        with pytest.raises(CircuitContractError, match="Mask voltages"):
            denoise_image_circuit(sap_tensor((8, 8), 0.5, seed=2), ModelImpl.MSC)

    def test_only_circuit_models(self):
        with pytest.raises(ConfigError):
            denoise_image_circuit(np.zeros((4, 4)), ModelImpl.TSC)

    def test_unsafe_read_voltage(self):
        with pytest.raises(CircuitContractError):
            denoise_image_circuit(np.zeros((4, 4)), ModelImpl.MSC, config=CircuitParams(read_voltage=2.0))

    def test_single_mode_with_signed_kernel(self):
        plan = StagePlan(stages=[StageParams(size=3, kernel="fixture5")])
        with pytest.raises(ConfigError):
            denoise_image_circuit(np.zeros((4, 4)), ModelImpl.MSC, plan, CircuitParams(weight_mode=WeightMode.SINGLE))

    def test_conductance_variability_is_seeded(self):
        config = CircuitParams(conductance_sigma=0.05, sigma_seed=3)
        kernel = get_kernel("ones3")
        first = stage_pairs(kernel, config, DeviceParams())
        second = stage_pairs(kernel, config, DeviceParams())
        np.testing.assert_array_equal(first.g_plus, second.g_plus)

        a_tilde = sap_tensor((12, 12), 0.3, seed=1)
        ideal = denoise_image_circuit(a_tilde, ModelImpl.MSC)
        perturbed = denoise_image_circuit(a_tilde, ModelImpl.MSC, config=config)
        assert not np.array_equal(ideal.a_hat, perturbed.a_hat)
