import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from emrs.control import (
    DEFAULT_STEERING_MOTOR,
    DEFAULT_STEERING_POSITION_GAINS,
    DEFAULT_WHEEL_VELOCITY_GAINS,
    MotorState,
    PositionLoopState,
    VelocityLoopState,
    motor_step,
    position_loop_step,
    rate_servo_torque,
    velocity_loop_step,
)
from emrs.manager import SteeringProfile, plan_steering_transition

DT_PHYS = 1e-3
DT_CTRL = 0.01


def default_velocity_loop(limit=120.0):
    g = DEFAULT_WHEEL_VELOCITY_GAINS
    return VelocityLoopState(kp=g["kp"], ki=g["ki"], output_limit_nm=limit,
                             integrator_limit=g["integrator_limit"])


def run_speed_step(setpoint, load=0.0, duration=1.0, dt_phys=DT_PHYS, ctrl_every=10):
    loop = default_velocity_loop()
    motor = MotorState()
    torque = 0.0
    trace = []
    n = int(duration / dt_phys)
    for k in range(n):
        if k % ctrl_every == 0:
            torque, loop = velocity_loop_step(loop, setpoint, motor.speed_radps,
                                              dt_phys * ctrl_every)
        motor = motor_step(motor, torque, load, dt_phys)
        trace.append((k * dt_phys, motor.speed_radps))
    return trace


class TestVelocityLoop:
    def test_zero_error_zero_integrator_gives_zero(self):
        loop = default_velocity_loop()
        torque, _ = velocity_loop_step(loop, 5.0, 5.0, DT_CTRL)
        assert torque == 0.0

    def test_zero_error_outputs_integral_term(self):
        loop = default_velocity_loop()
        loop = VelocityLoopState(loop.kp, loop.ki, loop.output_limit_nm,
                                 loop.integrator_limit, integrator=0.01)
        torque, _ = velocity_loop_step(loop, 5.0, 5.0, DT_CTRL)
        assert torque == pytest.approx(loop.ki * 0.01)

    def test_step_response_settles_fast_without_big_overshoot(self):
        trace = run_speed_step(10.0)
        peak = max(s for _, s in trace)
        assert peak <= 10.0 * 1.10
        late = [t for t, s in trace if abs(s - 10.0) > 0.02 * 10.0]
        assert (max(late) if late else 0.0) <= 0.5

    def test_integrator_never_exceeds_clamp_under_saturation(self):
        loop = default_velocity_loop(limit=5.0)
        for _ in range(2000):
            _, loop = velocity_loop_step(loop, 100.0, 0.0, DT_CTRL)
        assert abs(loop.integrator) <= loop.integrator_limit + 1e-12

    @given(
        sp=st.floats(-50, 50),
        meas=st.floats(-50, 50),
        integ=st.floats(-0.5, 0.5),
    )
    @settings(max_examples=200, deadline=None)
    def test_output_always_within_limit(self, sp, meas, integ):
        loop = VelocityLoopState(60.0, 600.0, 25.0, 0.5, integrator=integ)
        torque, nxt = velocity_loop_step(loop, sp, meas, DT_CTRL)
        assert abs(torque) <= 25.0
        assert abs(nxt.integrator) <= 0.5


class TestPositionLoop:
    def test_settled_gives_zero(self):
        loop = PositionLoopState(kp=4.0, kd=0.1, output_limit_radps=0.5236)
        assert position_loop_step(loop, 0.7, 0.7, 0.0, DT_CTRL) == 0.0

    def test_clamps_at_rate_limit(self):
        loop = PositionLoopState(kp=4.0, kd=0.0, output_limit_radps=0.5236)
        assert position_loop_step(loop, 0.5, 0.0, 0.0, DT_CTRL) == pytest.approx(0.5236)
        assert position_loop_step(loop, -0.5, 0.0, 0.0, DT_CTRL) == pytest.approx(-0.5236)

    def test_tracks_trapezoidal_trajectory_within_tolerance(self):
        g = DEFAULT_STEERING_POSITION_GAINS
        loop = PositionLoopState(kp=g["kp"], kd=g["kd"],
                                 output_limit_radps=math.radians(45))
        traj = plan_steering_transition(
            (0.0, 0.0, 0.0, 0.0), (math.pi / 2, 0.0, 0.0, 0.0), SteeringProfile())
        motor = DEFAULT_STEERING_MOTOR
        angle = 0.0
        rate_cmd = 0.0
        max_err = 0.0
        n = int((traj.duration_s + 1.0) / DT_PHYS)
        for k in range(n):
            t = k * DT_PHYS
            setp = traj.sample(t)[0]
            if k % 10 == 0:
                rate_cmd = position_loop_step(loop, setp, angle, motor.speed_radps,
                                              DT_CTRL)
            tau = rate_servo_torque(motor, rate_cmd, motor.speed_radps, 40.0)
            motor = motor_step(motor, tau, 0.0, DT_PHYS)
            angle += motor.speed_radps * DT_PHYS
            if t > 0.2:
                max_err = max(max_err, abs(setp - angle))
        assert max_err < 0.02
        assert abs(angle - math.pi / 2) < 1e-3

    @given(
        sp=st.floats(-math.pi, math.pi),
        meas=st.floats(-math.pi, math.pi),
        rate=st.floats(-2, 2),
    )
    @settings(max_examples=200, deadline=None)
    def test_output_always_clamped(self, sp, meas, rate):
        loop = PositionLoopState(kp=36.0, kd=0.04, output_limit_radps=0.7854)
        out = position_loop_step(loop, sp, meas, rate, DT_CTRL)
        assert abs(out) <= 0.7854


class TestMotorPlant:
    def test_equilibrium_at_rest(self):
        motor = MotorState(temp_c=22.0)
        nxt = motor_step(motor, 0.0, 0.0, DT_PHYS)
        assert nxt.speed_radps == 0.0
        assert nxt.current_a == 0.0
        assert nxt.temp_c == pytest.approx(22.0)

    def test_cooling_towards_ambient(self):
        motor = MotorState(temp_c=60.0)
        for _ in range(5000):
            motor = motor_step(motor, 0.0, 0.0, DT_PHYS)
        assert 22.0 < motor.temp_c < 60.0

    def test_converges_to_analytic_first_order_speed(self):
        motor = MotorState()
        tau, t_end = 2.0, 20.0
        for _ in range(int(t_end / DT_PHYS)):
            motor = motor_step(motor, tau, 0.0, DT_PHYS)
        b, J = motor.damping_nms, motor.inertia_kgm2
        want = tau / b * (1.0 - math.exp(-b * t_end / J))
        assert motor.speed_radps == pytest.approx(want, rel=0.01)

    def test_stall_heats_until_dissipation_balance(self):
        motor = MotorState()
        temps = []
        for k in range(60000):
            motor = motor_step(motor, 40.0, 40.0, DT_PHYS)  # stalled at 40 Nm
            if k % 5000 == 0:
                temps.append(motor.temp_c)
        assert all(b >= a - 1e-9 for a, b in zip(temps, temps[1:]))
        current = 40.0 / motor.torque_constant_nm_per_a
        balance = motor.ambient_c + current**2 * motor.winding_res_ohm / motor.dissipation_w_per_c
        assert motor.temp_c <= balance + 1e-6

    def test_torque_saturated_at_limit(self):
        motor = MotorState(torque_limit_nm=10.0)
        nxt = motor_step(motor, 500.0, 0.0, DT_PHYS)
        assert nxt.current_a == pytest.approx(10.0 / motor.torque_constant_nm_per_a)

    def test_kinetic_decay_with_zero_command(self):
        motor = MotorState(speed_radps=5.0)
        speeds = [motor.speed_radps]
        for _ in range(8000):
            motor = motor_step(motor, 0.0, 0.0, DT_PHYS)
            speeds.append(motor.speed_radps)
        assert all(b <= a + 1e-12 for a, b in zip(speeds, speeds[1:]))
        assert speeds[-1] < 1.0


class TestDiscretisation:
    def test_halving_physics_dt_changes_trajectory_under_one_percent(self):
        def run(dt_phys):
            loop = default_velocity_loop()
            motor = MotorState()
            torque = 0.0
            out = []
            ctrl_every = int(round(DT_CTRL / dt_phys))
            n = int(10.0 / dt_phys)
            for k in range(n):
                if k % ctrl_every == 0:
                    torque, loop_new = velocity_loop_step(
                        loop, 1.2, motor.speed_radps, DT_CTRL)
                    loop = loop_new
                motor = motor_step(motor, torque, 2.0, dt_phys)
                if (k + 1) % int(round(0.05 / dt_phys)) == 0:
                    out.append(motor.speed_radps)
            return out

        coarse = run(1e-3)
        fine = run(5e-4)
        n = min(len(coarse), len(fine))
        num = sum((a - b) ** 2 for a, b in zip(coarse[:n], fine[:n]))
        den = sum(b**2 for b in fine[:n])
        assert math.sqrt(num / den) < 0.01
