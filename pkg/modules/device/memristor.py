"""
Threshold memristor: i = v / R, dR/dt = f_th(v) gated at the HRS/LRS bounds.

Device state is a value. Every operation returns a new MemristorDevice.
"""

import math
from typing import Optional

import numpy as np
from pydantic import BaseModel, Field, model_validator

from modules.seconv.data_classes import DeviceParams
from modules.utils.logger import get_logger

logger = get_logger()


class MemristorDevice(BaseModel):
    params: DeviceParams = Field(default_factory=DeviceParams)
    resistance: float = Field(default=1e4, description="Current memristance in ohms")

    @model_validator(mode="after")
    def check_bounds(self):
        if not self.params.r_on <= self.resistance <= self.params.r_off:
            raise ValueError(
                f"resistance {self.resistance} outside [{self.params.r_on}, {self.params.r_off}]"
            )
        return self

    @classmethod
    def at_lrs(cls, params: Optional[DeviceParams] = None) -> 'MemristorDevice':
        params = params or DeviceParams()
        return cls(params=params, resistance=params.r_on)

    @classmethod
    def at_hrs(cls, params: Optional[DeviceParams] = None) -> 'MemristorDevice':
        params = params or DeviceParams()
        return cls(params=params, resistance=params.r_off)

    def with_resistance(self, resistance: float) -> 'MemristorDevice':
        clamped = min(max(resistance, self.params.r_on), self.params.r_off)
        return MemristorDevice(params=self.params, resistance=clamped)


class ProgrammingResult(BaseModel):
    device: MemristorDevice
    switched: bool
    switch_time: float = Field(description="Seconds, inf when the drive is sub-threshold")
    energy: float = Field(description="Joules dissipated while switching")

    @property
    def mean_power(self) -> float:
        """Switching energy over switching time, watts."""
        if not self.switched or self.switch_time <= 0:
            return 0.0
        return self.energy / self.switch_time


def f_th(v: float, params: DeviceParams) -> float:
    return params.beta * v + 0.5 * (params.alpha - params.beta) * (abs(v + params.v_th) - abs(v - params.v_th))


def _gate(v: float, resistance: float, params: DeviceParams) -> float:
    up = 1.0 if (v > 0 and params.r_off - resistance > 0) else 0.0
    down = 1.0 if (v < 0 and resistance - params.r_on > 0) else 0.0
    return up + down


def rate(device: MemristorDevice, v: float) -> float:
    """dR/dt in ohms per second."""
    return f_th(v, device.params) * _gate(v, device.resistance, device.params)


def step(device: MemristorDevice, v: float, dt: Optional[float] = None) -> MemristorDevice:
    """One explicit Euler step, clamped to [R_ON, R_OFF]."""
    dt = device.params.dt if dt is None else dt
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    return device.with_resistance(device.resistance + rate(device, v) * dt)


def current(device: MemristorDevice, v: float) -> float:
    return v / device.resistance


def _target(device: MemristorDevice, v: float) -> float:
    return device.params.r_off if v > 0 else device.params.r_on


def program_constant(device: MemristorDevice, v: float) -> ProgrammingResult:
    """
    Closed-form switching under a constant drive (valid for alpha = 0, where
    dR/dt is constant above threshold).

    switch_time = |R_end - R_start| / |f_th(v)|
    energy      = v^2 / |f_th(v)| * |ln(R_end / R_start)|
    """
    params = device.params
    r_rate = f_th(v, params)
    if abs(v) <= params.v_th or r_rate == 0.0:
        return ProgrammingResult(device=device, switched=False, switch_time=math.inf, energy=0.0)
    if params.alpha != 0.0:
        logger.warning("program_constant assumes alpha = 0; got alpha = %g", params.alpha)

    r_start = device.resistance
    r_end = _target(device, v)
    switch_time = abs(r_end - r_start) / abs(r_rate)
    energy = v * v / abs(r_rate) * abs(math.log(r_end / r_start))
    return ProgrammingResult(
        device=device.with_resistance(r_end),
        switched=True,
        switch_time=switch_time,
        energy=energy,
    )


def program_euler(device: MemristorDevice,
                  v: float,
                  dt: Optional[float] = None,
                  max_time: float = 10.0) -> ProgrammingResult:
    """
    Integrate a constant drive with explicit Euler until the device reaches the
    bound it is driven toward. Energy uses the trapezoid rule on v^2 / R.
    """
    params = device.params
    dt = params.dt if dt is None else dt
    if abs(v) <= params.v_th and params.alpha == 0.0:
        return ProgrammingResult(device=device, switched=False, switch_time=math.inf, energy=0.0)

    r_end = _target(device, v)
    elapsed = 0.0
    energy = 0.0
    state = device
    while state.resistance != r_end and elapsed < max_time:
        nxt = step(state, v, dt)
        if nxt.resistance == state.resistance:
            break
        r_rate = rate(state, v)
        # the last step stops exactly at the bound
        h = dt if nxt.resistance != r_end else abs(r_end - state.resistance) / abs(r_rate)
        energy += 0.5 * h * v * v * (1.0 / state.resistance + 1.0 / nxt.resistance)
        elapsed += h
        state = nxt

    switched = state.resistance == r_end
    return ProgrammingResult(
        device=state,
        switched=switched,
        switch_time=elapsed if switched else math.inf,
        energy=energy,
    )


def programming_power(result: ProgrammingResult,
                      hold_voltage: float = 0.0,
                      hold_duration: float = 0.0) -> float:
    """
    Average power over switching plus an optional static hold at the final
    resistance: (E_switch + v_hold^2 / R_final * t_hold) / (t_switch + t_hold).
    """
    if not result.switched:
        if hold_duration <= 0:
            return 0.0
        return hold_voltage ** 2 / result.device.resistance
    hold_energy = hold_voltage ** 2 / result.device.resistance * hold_duration
    return (result.energy + hold_energy) / (result.switch_time + hold_duration)


def read_is_safe(v_read: float, params: DeviceParams) -> bool:
    """True when a read voltage cannot move the state (|v| <= V_th at alpha = 0)."""
    return params.alpha == 0.0 and abs(v_read) <= params.v_th


def sweep(device: MemristorDevice, voltages: np.ndarray, dt: Optional[float] = None) -> np.ndarray:
    """Resistance trajectory under a voltage sequence, one Euler step per sample."""
    trajectory = np.empty(len(voltages))
    state = device
    for i, v in enumerate(voltages):
        state = step(state, float(v), dt)
        trajectory[i] = state.resistance
    return trajectory
