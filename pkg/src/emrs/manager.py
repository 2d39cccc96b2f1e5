"""Supervisory locomotion state machine.

The manager accepts speed and mode-change commands, sequences safe mode
transitions (stop the wheels, re-aim the steering along a synchronized
trapezoidal trajectory, resume), and rate-limits every steering setpoint it
emits so downstream position loops are never asked to teleport.

Mode changes always pass through a Reconfiguring phase during which all
wheel speed setpoints are exactly zero.  A fault latches until an explicit
reset; while faulted the manager emits zero wheel speeds and holds the
steering setpoints where they are.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .kinematics import inverse_kinematics
from .errors import EmrsError
from .types import (
    BodyMotionCommand,
    CrabCommand,
    Four,
    LocomotionMode,
    PointTurnCommand,
    RoverGeometry,
    WheelSetpointArray,
    zero_command,
)


class Phase(str, Enum):
    IDLE = "idle"
    DRIVING = "driving"
    RECONFIGURING = "reconfiguring"
    FAULT = "fault"


@dataclass(frozen=True)
class Speed:
    body: BodyMotionCommand


@dataclass(frozen=True)
class ChangeMode:
    mode: LocomotionMode


@dataclass(frozen=True)
class EStop:
    pass


@dataclass(frozen=True)
class Reset:
    pass


ManagerCommand = Speed | ChangeMode | EStop | Reset


@dataclass(frozen=True)
class SteeringProfile:
    max_rate_radps: float = math.radians(30)
    max_accel_radps2: float = math.radians(60)

    def __post_init__(self):
        if self.max_rate_radps <= 0 or self.max_accel_radps2 <= 0:
            raise ValueError("steering profile rates must be positive")


@dataclass(frozen=True)
class SteeringTrajectory:
    """Synchronized per-wheel trapezoidal steering move.

    Every wheel starts and ends together; shorter moves are stretched in
    time so no wheel ever exceeds the profile limits.
    """

    start: Four
    end: Four
    profile: SteeringProfile
    duration_s: float

    def sample(self, t: float) -> Four:
        if t <= 0.0:
            return self.start
        if t >= self.duration_s or self.duration_s == 0.0:
            return self.end
        out = []
        for s, e in zip(self.start, self.end):
            own = _move_duration(abs(e - s), self.profile)
            # stretch this wheel's own profile onto the shared clock
            local_t = t * (own / self.duration_s) if self.duration_s > 0 else own
            out.append(s + math.copysign(_profile_distance(local_t, abs(e - s), self.profile), e - s))
        return tuple(out)


def _move_duration(dist: float, p: SteeringProfile) -> float:
    if dist == 0.0:
        return 0.0
    ramp_dist = p.max_rate_radps**2 / p.max_accel_radps2
    if dist < ramp_dist:
        return 2.0 * math.sqrt(dist / p.max_accel_radps2)
    return dist / p.max_rate_radps + p.max_rate_radps / p.max_accel_radps2


def _profile_distance(t: float, dist: float, p: SteeringProfile) -> float:
    if dist == 0.0:
        return 0.0
    total = _move_duration(dist, p)
    if t <= 0.0:
        return 0.0
    if t >= total:
        return dist
    ramp_dist = p.max_rate_radps**2 / p.max_accel_radps2
    a = p.max_accel_radps2
    if dist < ramp_dist:
        half = total / 2.0
        if t < half:
            return 0.5 * a * t * t
        return dist - 0.5 * a * (total - t) ** 2
    t_ramp = p.max_rate_radps / a
    if t < t_ramp:
        return 0.5 * a * t * t
    if t > total - t_ramp:
        return dist - 0.5 * a * (total - t) ** 2
    return p.max_rate_radps * (t - t_ramp / 2.0)


def plan_steering_transition(
    current: Four, target: Four, profile: SteeringProfile
) -> SteeringTrajectory:
    """Plan a synchronized trapezoidal move from current to target angles."""
    duration = max(_move_duration(abs(e - s), profile) for s, e in zip(current, target))
    return SteeringTrajectory(tuple(current), tuple(target), profile, duration)


@dataclass(frozen=True)
class SafetyLimits:
    max_motor_current_a: float = 14.0
    max_motor_temp_c: float = 80.0
    max_tracking_err_radps: float = 1.0
    max_steering_err_rad: float = 0.12
    command_timeout_s: float = 0.5

    def __post_init__(self):
        for name in (
            "max_motor_current_a",
            "max_motor_temp_c",
            "max_tracking_err_radps",
            "max_steering_err_rad",
            "command_timeout_s",
        ):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")


@dataclass(frozen=True)
class ManagerState:
    """Snapshot of the manager for telemetry and tests."""

    phase: Phase
    mode: LocomotionMode
    fault_reason: Optional[str] = None
    reconfig_from: Optional[LocomotionMode] = None
    reconfig_elapsed_s: float = 0.0
    reconfig_duration_s: float = 0.0


@dataclass
class ManagerConfig:
    v_max_mps: float = 0.2
    omega_max_radps: float = 0.3
    steering: SteeringProfile = field(default_factory=SteeringProfile)


class LocomotionManager:
    """Deterministic command-to-setpoint state machine.

    Single logical owner: advance it from one place via handle_command()
    and tick(); both return the freshly emitted wheel setpoints.
    Advisories (rejected commands, deadman notices) accumulate until
    drained with pop_advisories().
    """

    def __init__(self, geometry: RoverGeometry, config: ManagerConfig | None = None):
        self.geometry = geometry
        self.config = config or ManagerConfig()
        self.phase = Phase.IDLE
        self.mode = LocomotionMode.ACKERMANN
        self.fault_reason: Optional[str] = None
        self.last_command_time = 0.0
        self._active: Optional[BodyMotionCommand] = None
        self._pending: Optional[BodyMotionCommand] = None
        self._reconfig_from: Optional[LocomotionMode] = None
        self._last_crab_heading = 0.0
        self._traj: Optional[SteeringTrajectory] = None
        self._traj_t0 = 0.0
        self._emitted = (0.0, 0.0, 0.0, 0.0)
        self._last_emit_time: Optional[float] = None
        self._advisories: list[tuple[float, str, str]] = []

    # -- public surface ----------------------------------------------------

    def state(self) -> ManagerState:
        if self.phase is Phase.RECONFIGURING and self._traj is not None:
            return ManagerState(
                self.phase,
                self.mode,
                self.fault_reason,
                reconfig_from=self._reconfig_from,
                reconfig_elapsed_s=self._traj_elapsed,
                reconfig_duration_s=self._traj.duration_s,
            )
        return ManagerState(self.phase, self.mode, self.fault_reason)

    def pop_advisories(self) -> list[tuple[float, str, str]]:
        out = self._advisories
        self._advisories = []
        return out

    def handle_command(self, cmd: ManagerCommand, now: float) -> WheelSetpointArray:
        if isinstance(cmd, EStop):
            self._enter_fault("estop")
            self.last_command_time = now
            return self._emit(now)

        if isinstance(cmd, Reset):
            if self.phase is not Phase.FAULT:
                self._advise(now, "invalid_command", "reset outside fault")
            else:
                self.phase = Phase.IDLE
                self.fault_reason = None
                self._active = None
                self._pending = None
            self.last_command_time = now
            return self._emit(now)

        if isinstance(cmd, ChangeMode):
            if self.phase is Phase.FAULT:
                self._advise(now, "invalid_command", "mode change while faulted")
                return self._emit(now)
            self.last_command_time = now
            self._begin_reconfiguration(cmd.mode, now)
            return self._emit(now)

        # Speed
        body = cmd.body
        if self.phase is Phase.FAULT:
            self._advise(now, "invalid_command", "speed command while faulted")
            return self._emit(now)
        if not self._within_limits(body):
            self._advise(now, "invalid_command", "speed command outside limits")
            return self._emit(now)
        self.last_command_time = now
        if self.phase is Phase.RECONFIGURING:
            self._pending = body  # latched, latest wins
            return self._emit(now)
        if body.mode is not self.mode:
            self._advise(
                now,
                "invalid_command",
                f"speed variant {body.mode.value} does not match mode {self.mode.value}",
            )
            return self._emit(now)
        self._activate(body)
        return self._emit(now)

    def tick(self, now: float) -> WheelSetpointArray:
        """Advance trajectories and regenerate setpoints; call at the
        control rate."""
        if self.phase is Phase.RECONFIGURING and self._traj is not None:
            if now - self._traj_t0 >= self._traj.duration_s:
                self._finish_reconfiguration(now)
        return self._emit(now)

    def force_fault(self, reason: str, now: float) -> WheelSetpointArray:
        """External supervision verdict: latch a fault."""
        self._enter_fault(reason)
        return self._emit(now)

    # -- internals ----------------------------------------------------------

    def _advise(self, now: float, code: str, detail: str):
        self._advisories.append((now, code, detail))

    def _within_limits(self, body: BodyMotionCommand) -> bool:
        v = getattr(body, "v_mps", 0.0)
        om = getattr(body, "omega_radps", 0.0)
        if abs(v) > self.config.v_max_mps + 1e-12:
            return False
        if abs(om) > self.config.omega_max_radps + 1e-12:
            return False
        if isinstance(body, CrabCommand) and abs(body.heading_rad) > self.geometry.steering_limit_rad:
            return False
        return True

    def _activate(self, body: BodyMotionCommand):
        self._active = body
        self.phase = Phase.DRIVING
        if isinstance(body, CrabCommand):
            self._last_crab_heading = body.heading_rad

    def _home_angles(self, mode: LocomotionMode) -> Four:
        if mode is LocomotionMode.CRAB:
            h = self._last_crab_heading
            return (h, h, h, h)
        if mode is LocomotionMode.POINT_TURN:
            sp = inverse_kinematics(mode, PointTurnCommand(1.0), self.geometry)
            return sp.steering_rad
        return (0.0, 0.0, 0.0, 0.0)

    def _begin_reconfiguration(self, target_mode: LocomotionMode, now: float):
        self._reconfig_from = self.mode
        self.mode = target_mode
        self._active = None
        self._traj = plan_steering_transition(
            self._emitted, self._home_angles(target_mode), self.config.steering
        )
        self._traj_t0 = now
        if self._traj.duration_s == 0.0:
            self.phase = Phase.DRIVING
            self._traj = None
        else:
            self.phase = Phase.RECONFIGURING

    def _finish_reconfiguration(self, now: float):
        self._emitted = self._traj.end
        # the slew budget restarts when the wheels reached home, not at the
        # tick that first observes it, or completion plus slew could move a
        # setpoint nearly twice the per-tick allowance
        self._last_emit_time = self._traj_t0 + self._traj.duration_s
        self._traj = None
        self.phase = Phase.DRIVING
        if self._pending is not None and self._pending.mode is self.mode:
            self._activate(self._pending)
        self._pending = None

    def _enter_fault(self, reason: str):
        self.phase = Phase.FAULT
        self.fault_reason = reason
        self._active = None
        self._pending = None
        self._traj = None

    @property
    def _traj_elapsed(self) -> float:
        if self._traj is None or self._last_emit_time is None:
            return 0.0
        return max(0.0, self._last_emit_time - self._traj_t0)

    def _emit(self, now: float) -> WheelSetpointArray:
        dt = 0.0
        if self._last_emit_time is not None:
            dt = max(0.0, now - self._last_emit_time)
        self._last_emit_time = now

        if self.phase is Phase.RECONFIGURING and self._traj is not None:
            angles = self._traj.sample(now - self._traj_t0)
            self._emitted = angles
            return WheelSetpointArray(angles, (0.0, 0.0, 0.0, 0.0))

        if self.phase is Phase.DRIVING and self._active is not None:
            try:
                target = inverse_kinematics(self.mode, self._active, self.geometry)
            except EmrsError as exc:
                self._advise(now, "kinematics_error", str(exc))
                self._active = zero_command(self.mode)
                target = inverse_kinematics(self.mode, self._active, self.geometry)
            angles = self._slew(target.steering_rad, dt)
            self._emitted = angles
            return WheelSetpointArray(angles, target.speed_radps)

        # idle / fault / driving with no active command: hold, zero speed
        return WheelSetpointArray(self._emitted, (0.0, 0.0, 0.0, 0.0))

    def _slew(self, target: Four, dt: float) -> Four:
        step = self.config.steering.max_rate_radps * dt
        out = []
        for cur, tgt in zip(self._emitted, target):
            delta = tgt - cur
            if abs(delta) > step:
                delta = math.copysign(step, delta)
            out.append(cur + delta)
        return tuple(out)


@dataclass(frozen=True)
class HealthVerdict:
    healthy: bool
    reason: Optional[str] = None


class HealthSupervisor:
    """Watches telemetry against safety limits.

    Current and temperature limits trip immediately; tracking errors must
    persist for the sustain window; command silence past the timeout is the
    teleop deadman backstop.
    """

    def __init__(self, limits: SafetyLimits, sustain_window_s: float = 0.5):
        self.limits = limits
        self.sustain_window_s = sustain_window_s
        self._speed_bad_since: list[Optional[float]] = [None] * 4
        self._steer_bad_since: list[Optional[float]] = [None] * 4

    def check(self, frame, now: float) -> HealthVerdict:
        lim = self.limits
        for i in range(4):
            if abs(frame.drive_current_a[i]) > lim.max_motor_current_a or abs(
                frame.steer_current_a[i]
            ) > lim.max_motor_current_a:
                return HealthVerdict(False, "over_current")
            if (
                frame.drive_temp_c[i] > lim.max_motor_temp_c
                or frame.steer_temp_c[i] > lim.max_motor_temp_c
            ):
                return HealthVerdict(False, "over_temperature")

        for i in range(4):
            err = abs(frame.wheel_speed_sp_radps[i] - frame.wheel_speed_radps[i])
            if err > lim.max_tracking_err_radps:
                if self._speed_bad_since[i] is None:
                    self._speed_bad_since[i] = now
                elif now - self._speed_bad_since[i] > self.sustain_window_s:
                    return HealthVerdict(False, "wheel_tracking_error")
            else:
                self._speed_bad_since[i] = None

            err = abs(frame.steer_angle_sp_rad[i] - frame.steer_angle_rad[i])
            if err > lim.max_steering_err_rad:
                if self._steer_bad_since[i] is None:
                    self._steer_bad_since[i] = now
                elif now - self._steer_bad_since[i] > self.sustain_window_s:
                    return HealthVerdict(False, "steering_tracking_error")
            else:
                self._steer_bad_since[i] = None

        if now - frame.last_command_time > lim.command_timeout_s:
            return HealthVerdict(False, "command_timeout")
        return HealthVerdict(True)
