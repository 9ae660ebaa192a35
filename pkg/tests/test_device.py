"""
Test the threshold memristor model and its programming figures.
"""

import math

import numpy as np
import pytest

from modules.device.memristor import (MemristorDevice, f_th, rate, step, current, program_constant, program_euler,
                                      programming_power, read_is_safe, sweep)
from modules.seconv.data_classes import DeviceParams


class TestThresholdModel:
    """Test the state equation."""

    @pytest.mark.parametrize("v,expected", [(0.0, 0.0), (1.0, 0.0), (-1.5, 0.0), (2.0, 5e6), (-2.0, -5e6)])
    def test_f_th(self, v, expected):
        assert f_th(v, DeviceParams()) == pytest.approx(expected)

    def test_sub_threshold_read_does_not_move_state(self):
        device = MemristorDevice(resistance=5e4)
        assert step(device, 1.0).resistance == 5e4
        assert current(device, 1.0) == pytest.approx(2e-5)

    def test_gate_holds_the_bounds(self):
        assert rate(MemristorDevice.at_hrs(), 2.0) == 0.0
        assert rate(MemristorDevice.at_lrs(), -2.0) == 0.0
        assert rate(MemristorDevice.at_lrs(), 2.0) > 0

    def test_step_clamps(self):
        device = MemristorDevice(resistance=999_900.0)
        assert step(device, 2.0).resistance == DeviceParams().r_off

    def test_step_rejects_bad_dt(self):
        with pytest.raises(ValueError):
            step(MemristorDevice.at_lrs(), 2.0, dt=0.0)

    def test_invalid_resistance(self):
        with pytest.raises(ValueError):
            MemristorDevice(resistance=1.0)

    def test_sweep_trajectory(self):
        trajectory = sweep(MemristorDevice.at_lrs(), np.array([2.0, 2.0, 1.0, -2.0]))
        np.testing.assert_allclose(trajectory, [10500.0, 11000.0, 11000.0, 10500.0])

    def test_read_is_safe(self):
        params = DeviceParams()
        assert read_is_safe(1.0, params)
        assert read_is_safe(-1.5, params)
        assert not read_is_safe(1.6, params)
        assert not read_is_safe(0.1, DeviceParams(alpha=10.0))


class TestProgramming:
    """Test LRS to HRS programming under a constant drive."""

    def test_closed_form_at_2v(self):
        result = program_constant(MemristorDevice.at_lrs(), 2.0)

        assert result.switched
        assert result.device.resistance == DeviceParams().r_off
        assert result.switch_time == pytest.approx(0.198)
        assert result.energy == pytest.approx(3.684e-6, rel=1e-3)
        assert result.mean_power * 1e6 == pytest.approx(18.6, abs=0.05)

    def test_euler_agrees_with_closed_form(self):
        closed = program_constant(MemristorDevice.at_lrs(), 2.0)
        euler = program_euler(MemristorDevice.at_lrs(), 2.0, dt=1e-4)

        assert euler.switched
        assert euler.switch_time == pytest.approx(closed.switch_time, rel=0.01)
        assert euler.energy == pytest.approx(closed.energy, rel=0.01)

    def test_reset_direction(self):
        result = program_constant(MemristorDevice.at_hrs(), -2.0)
        assert result.device.resistance == DeviceParams().r_on
        assert result.switch_time == pytest.approx(0.198)

    @pytest.mark.parametrize("v", [1.0, 1.5, -0.5])
    def test_sub_threshold_is_a_result(self, v):
        for program in (program_constant, program_euler):
            result = program(MemristorDevice.at_lrs(), v)
            assert not result.switched
            assert math.isinf(result.switch_time)
            assert result.energy == 0.0
            assert result.mean_power == 0.0

    def test_hold_term(self):
        result = program_constant(MemristorDevice.at_lrs(), 2.0)

        assert programming_power(result) == pytest.approx(result.mean_power)
        # holding at 1 V on 1 MOhm adds 1 uW for the hold window
        held = programming_power(result, hold_voltage=1.0, hold_duration=result.switch_time)
        assert held == pytest.approx((result.energy + 1e-6 * result.switch_time) / (2 * result.switch_time))
