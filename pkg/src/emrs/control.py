"""Inner control loops and actuator plant models.

Wheel drives run a PI velocity loop with anti-windup; steering units run a
PD position loop whose output is a rate command tracked by a rate servo
inside the actuator.  The plant is a first-order mechanical model with a
lumped thermal node so the supervision layer has real currents and
temperatures to watch:

    domega/dt = (tau_cmd - tau_load - damping * omega) / inertia
    current   = tau_cmd / torque_constant
    C dT/dt   = I^2 R - dissipation * (T - ambient)

Step functions are pure: they take a state value and return the next one.
"""

from __future__ import annotations

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class VelocityLoopState:
    """PI wheel-velocity loop with clamped integrator."""

    kp: float
    ki: float
    output_limit_nm: float
    integrator_limit: float
    integrator: float = 0.0
    last_error: float = 0.0


def _pi_raw(
    integ: float,
    kp: float,
    ki: float,
    out_limit: float,
    integ_limit: float,
    setpoint: float,
    measured: float,
    dt: float,
) -> tuple[float, float]:
    """Allocation-light PI core; returns (output, next integrator)."""
    error = setpoint - measured
    ni = integ + error * dt
    if ni > integ_limit:
        ni = integ_limit
    elif ni < -integ_limit:
        ni = -integ_limit
    out = kp * error + ki * ni
    if out > out_limit:
        out = out_limit
        ni = integ
    elif out < -out_limit:
        out = -out_limit
        ni = integ
    return out, ni


def velocity_loop_step(
    state: VelocityLoopState, setpoint: float, measured: float, dt: float
) -> tuple[float, VelocityLoopState]:
    """One PI update; returns (torque command, next state).

    The integrator freezes while the output is saturated so it never winds
    up past its clamp.
    """
    torque, integ = _pi_raw(
        state.integrator,
        state.kp,
        state.ki,
        state.output_limit_nm,
        state.integrator_limit,
        setpoint,
        measured,
        dt,
    )
    return torque, replace(state, integrator=integ, last_error=setpoint - measured)


@dataclass(frozen=True)
class PositionLoopState:
    """PD steering-position loop emitting a clamped rate command."""

    kp: float
    kd: float
    output_limit_radps: float


def position_loop_step(
    state: PositionLoopState,
    setpoint: float,
    measured: float,
    measured_rate: float,
    dt: float,
) -> float:
    """One PD update; returns the steering rate command (rad/s).

    Derivative acts on the measured rate so setpoint steps do not kick.
    """
    rate = state.kp * (setpoint - measured) - state.kd * measured_rate
    return min(max(rate, -state.output_limit_radps), state.output_limit_radps)


@dataclass(frozen=True)
class MotorState:
    """First-order motor plant with a lumped thermal node.

    Constant plant parameters travel with the state so the step function
    stays a pure value-to-value map.
    """

    speed_radps: float = 0.0
    current_a: float = 0.0
    temp_c: float = 22.0
    inertia_kgm2: float = 2.0
    damping_nms: float = 0.8
    torque_constant_nm_per_a: float = 10.0
    winding_res_ohm: float = 2.0
    torque_limit_nm: float = 120.0
    thermal_capacity_j_per_c: float = 600.0
    dissipation_w_per_c: float = 2.5
    ambient_c: float = 22.0


def motor_step(
    state: MotorState, torque_cmd: float, load_torque: float, dt: float
) -> MotorState:
    """Forward-Euler plant update over one physics period."""
    speed, current, temp = _motor_step_raw(
        state.speed_radps, state.temp_c, torque_cmd, load_torque, dt, state
    )
    return replace(state, speed_radps=speed, current_a=current, temp_c=temp)


def _motor_step_raw(
    speed: float,
    temp: float,
    torque_cmd: float,
    load_torque: float,
    dt: float,
    p: MotorState,
) -> tuple[float, float, float]:
    """Allocation-light core used by the simulator hot loop."""
    tau = min(max(torque_cmd, -p.torque_limit_nm), p.torque_limit_nm)
    speed += dt * (tau - load_torque - p.damping_nms * speed) / p.inertia_kgm2
    current = tau / p.torque_constant_nm_per_a
    heat = current * current * p.winding_res_ohm
    temp += dt * (heat - p.dissipation_w_per_c * (temp - p.ambient_c)) / p.thermal_capacity_j_per_c
    return speed, current, temp


def rate_servo_torque(p: MotorState, rate_cmd: float, speed: float, gain: float) -> float:
    """Torque demand of the steering rate servo embedded in the actuator."""
    return gain * (rate_cmd - speed)


# Defaults frozen after one tuning session against the default plant; the
# scenario file owns the live values.
DEFAULT_WHEEL_VELOCITY_GAINS = {"kp": 60.0, "ki": 600.0, "integrator_limit": 0.5}
DEFAULT_STEERING_POSITION_GAINS = {"kp": 36.0, "kd": 0.04}
DEFAULT_STEERING_RATE_GAIN = 40.0
DEFAULT_STEERING_MOTOR = MotorState(
    inertia_kgm2=0.4,
    damping_nms=2.0,
    torque_constant_nm_per_a=8.0,
    winding_res_ohm=1.5,
    torque_limit_nm=40.0,
    thermal_capacity_j_per_c=300.0,
    dissipation_w_per_c=1.5,
)
