"""Deterministic 2.5D rover simulator.

One World object owns the true state; a single Simulator advances it on a
fixed physics period (default 1 kHz) with the inner control loops, the
quasi-static load balance, the traction model and pose integration
refreshed at the control rate (default 100 Hz).  Each control tick applies,
in order: control loops, motor plants, traction, pose integration, attitude
from terrain.  Everything is a pure function of the initial state, the
command stream and the seed, so identical runs produce bit-identical
traces.

The traction model is a thrust-ratio law: each wheel can transmit at most
H = c*A + N*tan(phi); the demanded thrust (slope component, blade drag,
rolling resistance, commanded acceleration) is split across the wheels by
load share; slip stays zero until the demand/capacity ratio crosses the
soil's knee and then rises linearly to full spin at ratio one.  Turning in
place scrubs the contact patch, destroying the cohesive term, which is why
point turns degrade on steep tilts while straight climbs still hold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .control import (
    DEFAULT_STEERING_MOTOR,
    DEFAULT_STEERING_POSITION_GAINS,
    DEFAULT_STEERING_RATE_GAIN,
    DEFAULT_WHEEL_VELOCITY_GAINS,
    MotorState,
    PositionLoopState,
    _motor_step_raw,
    _pi_raw,
    position_loop_step,
)
from .errors import OutOfBounds, TipOver
from .kinematics import contact_point, forward_odometry, integrate_pose
from .manager import Phase
from .telemetry import TelemetryFrame
from .terrain import TerrainModel
from .types import (
    BodyTwist,
    Four,
    LocomotionMode,
    Pose2p5,
    RoverGeometry,
    WheelStateArray,
)

GRAVITY = 9.81


@dataclass(frozen=True)
class ManagerOutput:
    """What the locomotion manager hands the simulator every control tick."""

    steering_rad: Four
    speed_radps: Four
    mode: LocomotionMode
    cmd_twist: BodyTwist
    driving: bool


@dataclass(frozen=True)
class TrackingMeasurement:
    """Noisy pose from the facility camera tracking system."""

    x_m: float
    y_m: float
    yaw_rad: float
    pitch_rad: float
    roll_rad: float
    t_s: float
    valid: bool = True


def tracking_emulate(
    pose: Pose2p5,
    rng: np.random.Generator,
    t_s: float,
    sigma_pos_m: float = 1e-3,
    sigma_ang_rad: float = math.radians(1.0),
) -> TrackingMeasurement:
    """Additive zero-mean Gaussian noise on every pose channel."""
    n = rng.normal(0.0, 1.0, 5)
    return TrackingMeasurement(
        pose.x_m + sigma_pos_m * n[0],
        pose.y_m + sigma_pos_m * n[1],
        pose.yaw_rad + sigma_ang_rad * n[2],
        pose.pitch_rad + sigma_ang_rad * n[3],
        pose.roll_rad + sigma_ang_rad * n[4],
        t_s,
    )


def obstacle_check(obstacle_height_m: float, wheel_radius_m: float, thrust_margin: float) -> bool:
    """Traversal rule: clearable iff the step is no taller than the wheel
    radius and the thrust margin is at least one."""
    if obstacle_height_m < 0:
        raise ValueError("obstacle height must be non-negative")
    return obstacle_height_m <= wheel_radius_m and thrust_margin >= 1.0


def slip_from_ratio(ratio: float, knee: float) -> float:
    """Piecewise-linear slip law: zero below the knee, full spin at one."""
    if ratio <= knee:
        return 0.0
    if ratio >= 1.0:
        return 1.0
    return (ratio - knee) / (1.0 - knee)


def _solve3(m: list[list[float]], b: tuple[float, float, float]) -> tuple[float, float, float]:
    """Solve a symmetric 3x3 system by the adjugate."""
    a, d, g_ = m[0][0], m[0][1], m[0][2]
    e, h = m[1][1], m[1][2]
    k = m[2][2]
    det = a * (e * k - h * h) - d * (d * k - h * g_) + g_ * (d * h - e * g_)
    if abs(det) < 1e-12:
        raise TipOver("degenerate contact layout in load balance")
    inv = 1.0 / det
    x0 = inv * (b[0] * (e * k - h * h) - d * (b[1] * k - h * b[2]) + g_ * (b[1] * h - e * b[2]))
    x1 = inv * (a * (b[1] * k - b[2] * h) - b[0] * (d * k - h * g_) + g_ * (d * b[2] - b[1] * g_))
    x2 = inv * (a * (e * b[2] - h * b[1]) - d * (d * b[2] - g_ * b[1]) + b[0] * (d * h - e * g_))
    return (x0, x1, x2)


def wheel_loads(
    geometry: RoverGeometry,
    pitch_rad: float,
    roll_rad: float,
    payload_kg: float,
    payload_cog: tuple[float, float, float],
    steering_rad: Four,
) -> Four:
    """Quasi-static normal load per wheel.

    Solves the 3-equation rigid-body balance (force normal to the contact
    plane plus the two in-plane moments) and closes the statically
    indeterminate fourth unknown with the minimum-norm (symmetric
    pseudo-inverse) solution.  Raises TipOver when any load goes negative.
    """
    m_c = geometry.chassis_mass_kg
    m_p = payload_kg
    m = m_c + m_p
    cx = (m_c * geometry.cog_body[0] + m_p * payload_cog[0]) / m
    cy = (m_c * geometry.cog_body[1] + m_p * payload_cog[1]) / m
    cz = (m_c * geometry.cog_body[2] + m_p * payload_cog[2]) / m

    g_bx = -GRAVITY * math.sin(pitch_rad)
    g_by = -GRAVITY * math.sin(roll_rad)
    g_bz = -GRAVITY * math.cos(pitch_rad) * math.cos(roll_rad)

    total = -m * g_bz
    sum_ny = m * (cz * g_by - cy * g_bz)
    sum_nx = m * (cz * g_bx - cx * g_bz)

    contacts = [
        contact_point(p, steering_rad[i], geometry)
        for i, p in enumerate(geometry.pivot_positions)
    ]
    xs = [c[0] for c in contacts]
    ys = [c[1] for c in contacts]

    # A n = b with A rows (1..), (x..), (y..); minimum-norm n = A^T (A A^T)^-1 b
    b = (total, sum_nx, sum_ny)
    aat = [[0.0] * 3 for _ in range(3)]
    for i in range(4):
        row = (1.0, xs[i], ys[i])
        for r in range(3):
            for c in range(3):
                aat[r][c] += row[r] * row[c]
    lam = _solve3(aat, b)
    loads = tuple(lam[0] + lam[1] * xs[i] + lam[2] * ys[i] for i in range(4))
    if min(loads) < -1e-9:
        raise TipOver(
            f"negative wheel load at pitch {math.degrees(pitch_rad):.1f} deg, "
            f"roll {math.degrees(roll_rad):.1f} deg"
        )
    return tuple(max(0.0, n) for n in loads)


@dataclass
class SimConfig:
    physics_dt_s: float = 1e-3
    control_every: int = 10        # 100 Hz control rate
    telemetry_every: int = 50      # 20 Hz telemetry
    tracking_rate_hz: float = 60.0
    tracking_sigma_pos_m: float = 1e-3
    tracking_sigma_ang_rad: float = math.radians(1.0)
    accel_cap_mps2: float = 0.5
    creep_gain: float = 0.3


@dataclass
class WorldEvent:
    t_s: float
    kind: str
    detail: str


class World:
    """Mutable true state of the rover and its environment.

    Advance it only through a Simulator; readers should take
    telemetry_frame() snapshots, which are immutable.
    """

    def __init__(
        self,
        geometry: RoverGeometry,
        terrain: TerrainModel,
        start_pose: Pose2p5,
        seed: int = 0,
        payload_kg: float | None = None,
        payload_cog: tuple[float, float, float] = (0.0, 0.0, 0.55),
        blade_drag_n: float = 0.0,
        wheel_motor: MotorState | None = None,
        steer_motor: MotorState | None = None,
        velocity_gains: dict | None = None,
        position_gains: dict | None = None,
        steering_rate_gain: float = DEFAULT_STEERING_RATE_GAIN,
        steering_rate_limit_radps: float = math.radians(45.0),
    ):
        if payload_kg is None:
            payload_kg = geometry.payload_mass_kg
        if payload_kg < 0 or payload_kg > 300.0:
            raise ValueError("payload_kg must lie in [0, 300]")
        self.geometry = geometry
        self.terrain = terrain
        self.pose = start_pose
        self.payload_kg = payload_kg
        self.payload_cog = payload_cog
        self.blade_drag_n = blade_drag_n
        self.time_s = 0.0
        self.config = SimConfig()
        self.rng = np.random.default_rng(np.random.SeedSequence(seed))

        self.velocity_gains = {**DEFAULT_WHEEL_VELOCITY_GAINS, **(velocity_gains or {})}
        pg = {**DEFAULT_STEERING_POSITION_GAINS, **(position_gains or {})}
        self.wheel_plant = wheel_motor or MotorState()
        self.steer_plant = steer_motor or DEFAULT_STEERING_MOTOR
        self.position_loop = PositionLoopState(
            kp=pg["kp"], kd=pg["kd"], output_limit_radps=steering_rate_limit_radps
        )
        self.steering_rate_gain = steering_rate_gain

        # hot state, plain lists mutated by the stepper only
        self.wheel_speed = [0.0] * 4
        self.wheel_current = [0.0] * 4
        self.wheel_temp = [self.wheel_plant.ambient_c] * 4
        self.steer_rate = [0.0] * 4
        self.steer_current = [0.0] * 4
        self.steer_temp = [self.steer_plant.ambient_c] * 4
        self.vel_integr = [0.0] * 4

        self.steer_angles = [0.0, 0.0, 0.0, 0.0]
        self.slip = [0.0, 0.0, 0.0, 0.0]
        self.loads_n = [0.0, 0.0, 0.0, 0.0]
        self.actual_twist = BodyTwist(0.0, 0.0, 0.0)
        self.odometry_residual = 0.0
        self.events: list[WorldEvent] = []
        self.terminal: Optional[str] = None
        self.stall_steering: set[int] = set()  # fault-injection hook
        self._prev_cmd_speed = 0.0

        self._update_attitude()

    # -- helpers -------------------------------------------------------------

    def wheel_states(self) -> WheelStateArray:
        return WheelStateArray(tuple(self.steer_angles), tuple(self.wheel_speed))

    def total_mass(self) -> float:
        return self.geometry.chassis_mass_kg + self.payload_kg

    def motor_states(self) -> list[MotorState]:
        """Materialised 4 wheel + 4 steering motor snapshots, wheel order."""
        out = []
        for i in range(4):
            out.append(replace(self.wheel_plant, speed_radps=self.wheel_speed[i],
                               current_a=self.wheel_current[i], temp_c=self.wheel_temp[i]))
        for i in range(4):
            out.append(replace(self.steer_plant, speed_radps=self.steer_rate[i],
                               current_a=self.steer_current[i], temp_c=self.steer_temp[i]))
        return out

    def accel_demand(self, out: ManagerOutput, dt: float) -> float:
        """Positive commanded acceleration, finite-differenced and capped."""
        cmd_speed = math.hypot(out.cmd_twist.vx_mps, out.cmd_twist.vy_mps)
        accel = max(0.0, (cmd_speed - self._prev_cmd_speed) / dt)
        self._prev_cmd_speed = cmd_speed
        return min(accel, self.config.accel_cap_mps2)

    def _contacts_world(self) -> list[tuple[float, float]]:
        cy, sy = math.cos(self.pose.yaw_rad), math.sin(self.pose.yaw_rad)
        out = []
        for i, p in enumerate(self.geometry.pivot_positions):
            bx, by = contact_point(p, self.steer_angles[i], self.geometry)
            out.append((self.pose.x_m + cy * bx - sy * by, self.pose.y_m + sy * bx + cy * by))
        return out

    def _update_attitude(self):
        """Fit a plane through the terrain heights under the four contacts
        and turn its body-frame slopes into pitch and roll."""
        hs = []
        for (wx, wy) in self._contacts_world():
            if not self.terrain.in_bounds(wx, wy):
                raise OutOfBounds(f"wheel contact ({wx:.2f}, {wy:.2f}) left the terrain")
            hs.append(self.terrain.height_at(wx, wy))
        a = self.geometry.wheelbase_m / 2
        b = self.geometry.track_m / 2
        sx = (hs[0] + hs[1] - hs[2] - hs[3]) / (4 * a)
        sy = (hs[0] - hs[1] + hs[2] - hs[3]) / (4 * b)
        self.pose = replace(self.pose, pitch_rad=math.atan(sx), roll_rad=math.atan(sy))

    def telemetry_frame(
        self,
        phase: Phase,
        mode: LocomotionMode,
        fault_reason: Optional[str],
        out: ManagerOutput,
        tracked: TrackingMeasurement,
        last_command_time: float,
        last_commander: str = "",
    ) -> TelemetryFrame:
        return TelemetryFrame(
            t_s=self.time_s,
            phase=phase.value,
            mode=mode.value,
            fault_reason=fault_reason,
            cmd_vx_mps=out.cmd_twist.vx_mps,
            cmd_vy_mps=out.cmd_twist.vy_mps,
            cmd_omega_radps=out.cmd_twist.omega_radps,
            act_vx_mps=self.actual_twist.vx_mps,
            act_vy_mps=self.actual_twist.vy_mps,
            act_omega_radps=self.actual_twist.omega_radps,
            steer_angle_sp_rad=out.steering_rad,
            steer_angle_rad=tuple(self.steer_angles),
            wheel_speed_sp_radps=out.speed_radps,
            wheel_speed_radps=tuple(self.wheel_speed),
            drive_current_a=tuple(self.wheel_current),
            drive_temp_c=tuple(self.wheel_temp),
            steer_current_a=tuple(self.steer_current),
            steer_temp_c=tuple(self.steer_temp),
            slip_ratio=tuple(self.slip),
            true_x_m=self.pose.x_m,
            true_y_m=self.pose.y_m,
            true_yaw_rad=self.pose.yaw_rad,
            true_pitch_rad=self.pose.pitch_rad,
            true_roll_rad=self.pose.roll_rad,
            tracked_x_m=tracked.x_m,
            tracked_y_m=tracked.y_m,
            tracked_yaw_rad=tracked.yaw_rad,
            tracked_valid=tracked.valid,
            last_command_time=last_command_time,
            last_commander=last_commander,
        )


def traction_step(world: World, out: ManagerOutput, dt: float) -> tuple[BodyTwist, Four]:
    """Slip ratios and achieved body twist for the current control tick.

    Ground speed of wheel i scales by (1 - slip_i); on cross-slopes a
    downhill creep proportional to the lateral demand past the knee is
    added.  Immobilisation is slip = 1, never an error.
    """
    g = world.geometry
    soil = world.terrain.soil
    m = world.total_mass()
    g_bx = -GRAVITY * math.sin(world.pose.pitch_rad)
    g_by = -GRAVITY * math.sin(world.pose.roll_rad)
    loads = world.loads_n
    total_n = sum(loads) or 1.0

    wheels = world.wheel_states()
    raw_twist, _ = forward_odometry(wheels, g)

    # direction the rover is being asked to move
    if out.driving and (abs(out.cmd_twist.vx_mps) > 1e-9 or abs(out.cmd_twist.vy_mps) > 1e-9):
        vmag = math.hypot(out.cmd_twist.vx_mps, out.cmd_twist.vy_mps)
        ux, uy = out.cmd_twist.vx_mps / vmag, out.cmd_twist.vy_mps / vmag
    elif abs(raw_twist.vx_mps) > 1e-6 or abs(raw_twist.vy_mps) > 1e-6:
        vmag = math.hypot(raw_twist.vx_mps, raw_twist.vy_mps)
        ux, uy = raw_twist.vx_mps / vmag, raw_twist.vy_mps / vmag
    else:
        ux = uy = 0.0

    moving = any(abs(s) > 1e-6 for s in wheels.speed_radps)
    point_turning = out.mode is LocomotionMode.POINT_TURN
    lat_mag = math.hypot(g_bx, g_by)

    grade_opp = max(0.0, -(g_bx * ux + g_by * uy)) * m if (ux or uy) else 0.0
    drag = world.blade_drag_n if (moving and not point_turning) else 0.0
    accel_force = world.accel_demand(out, dt) * m

    slips = []
    for i in range(4):
        n_i = loads[i]
        share = n_i / total_n
        if point_turning:
            # churned patch: frictional capacity only, gravity held laterally
            capacity = n_i * soil.tan_friction
            demand = lat_mag * m * share if moving else 0.0
        else:
            capacity = soil.cohesion_force_n + n_i * soil.tan_friction
            demand = (grade_opp + drag + accel_force) * share + soil.rolling_resistance * n_i
            if not moving:
                demand = 0.0
        ratio = demand / capacity if capacity > 0 else 1.0
        slips.append(slip_from_ratio(ratio, soil.slip_knee))

    scaled = WheelStateArray(
        wheels.steering_rad,
        tuple(sp * (1.0 - s) for sp, s in zip(wheels.speed_radps, slips)),
    )
    twist, residual = forward_odometry(scaled, g)
    world.odometry_residual = residual

    # lateral creep on cross-slopes: demand past the knee bleeds downhill
    if not point_turning and moving and lat_mag > 1e-9:
        dx, dy = g_bx / lat_mag, g_by / lat_mag
        lat_ratio = 0.0
        for i in range(4):
            n_i = loads[i]
            cap = soil.cohesion_force_n + n_i * soil.tan_friction
            lat_ratio = max(lat_ratio, lat_mag * m * (n_i / total_n) / cap)
        creep = slip_from_ratio(lat_ratio, soil.slip_knee) * world.config.creep_gain
        if creep > 0.0:
            speed = math.hypot(twist.vx_mps, twist.vy_mps)
            twist = BodyTwist(
                twist.vx_mps + creep * speed * dx,
                twist.vy_mps + creep * speed * dy,
                twist.omega_radps,
            )

    return twist, tuple(slips)


class Simulator:
    """Sole mutator of a World; advances physics on the fixed period."""

    def __init__(self, world: World, config: SimConfig | None = None):
        self.world = world
        self.config = config or SimConfig()
        world.config = self.config
        self._tick = 0
        self._torques = [0.0, 0.0, 0.0, 0.0]
        self._steer_rate_cmds = [0.0, 0.0, 0.0, 0.0]
        self._load_torque = [0.0, 0.0, 0.0, 0.0]
        self._next_tracking_t = 0.0
        self._last_tracking = TrackingMeasurement(
            world.pose.x_m, world.pose.y_m, world.pose.yaw_rad,
            world.pose.pitch_rad, world.pose.roll_rad, 0.0,
        )

    def step(self, out: ManagerOutput) -> None:
        """Advance one physics tick under the held manager outputs."""
        w = self.world
        cfg = self.config
        dt = cfg.physics_dt_s
        if w.terminal is not None:
            w.time_s += dt
            self._tick += 1
            return

        if self._tick % cfg.control_every == 0:
            self._control_tick(out, dt * cfg.control_every)
            if w.terminal is not None:
                w.time_s += dt
                self._tick += 1
                return

        wp = w.wheel_plant
        sp_ = w.steer_plant
        gain = w.steering_rate_gain
        for i in range(4):
            w.wheel_speed[i], w.wheel_current[i], w.wheel_temp[i] = _motor_step_raw(
                w.wheel_speed[i], w.wheel_temp[i], self._torques[i], self._load_torque[i], dt, wp
            )
            rate_cmd = 0.0 if i in w.stall_steering else self._steer_rate_cmds[i]
            tau = gain * (rate_cmd - w.steer_rate[i])
            w.steer_rate[i], w.steer_current[i], w.steer_temp[i] = _motor_step_raw(
                w.steer_rate[i], w.steer_temp[i], tau, 0.0, dt, sp_
            )
            if i in w.stall_steering:
                w.steer_rate[i] = 0.0
            w.steer_angles[i] += w.steer_rate[i] * dt

        w.time_s += dt
        self._tick += 1

    def _control_tick(self, out: ManagerOutput, dt_ctrl: float):
        w = self.world
        vg = w.velocity_gains
        torque_limit = w.wheel_plant.torque_limit_nm
        for i in range(4):
            self._torques[i], w.vel_integr[i] = _pi_raw(
                w.vel_integr[i],
                vg["kp"],
                vg["ki"],
                torque_limit,
                vg["integrator_limit"],
                out.speed_radps[i],
                w.wheel_speed[i],
                dt_ctrl,
            )
            self._steer_rate_cmds[i] = position_loop_step(
                w.position_loop,
                out.steering_rad[i],
                w.steer_angles[i],
                w.steer_rate[i],
                dt_ctrl,
            )

        try:
            w.loads_n = list(
                wheel_loads(
                    w.geometry,
                    w.pose.pitch_rad,
                    w.pose.roll_rad,
                    w.payload_kg,
                    w.payload_cog,
                    tuple(w.steer_angles),
                )
            )
        except (TipOver, OutOfBounds) as exc:
            self._terminate(type(exc).__name__, str(exc))
            return

        twist, slips = traction_step(w, out, dt_ctrl)
        w.slip = list(slips)

        if self._blocked_by_obstacle(twist):
            twist = BodyTwist(0.0, 0.0, 0.0)
            w.slip = [1.0, 1.0, 1.0, 1.0]

        w.actual_twist = twist
        self._update_load_torques(out)

        try:
            w.pose = integrate_pose(w.pose, twist, dt_ctrl)
            w._update_attitude()
        except OutOfBounds as exc:
            self._terminate("OutOfBounds", str(exc))

    def _update_load_torques(self, out: ManagerOutput):
        """Reaction torque each wheel motor works against, from the same
        demand split the traction model uses."""
        w = self.world
        soil = w.terrain.soil
        m = w.total_mass()
        g_bx = -GRAVITY * math.sin(w.pose.pitch_rad)
        g_by = -GRAVITY * math.sin(w.pose.roll_rad)
        total_n = sum(w.loads_n) or 1.0
        moving = any(abs(s) > 1e-6 for s in out.speed_radps)
        for i in range(4):
            n_i = w.loads_n[i]
            if not moving:
                self._load_torque[i] = 0.0
                continue
            beta = w.steer_angles[i]
            sense = 1.0 if out.speed_radps[i] >= 0 else -1.0
            grade = -(g_bx * math.cos(beta) + g_by * math.sin(beta)) * m * (n_i / total_n) * sense
            drag = w.blade_drag_n * (n_i / total_n)
            force = max(0.0, grade + drag) + soil.rolling_resistance * n_i
            self._load_torque[i] = sense * force * w.geometry.wheel_radius_m

    def _blocked_by_obstacle(self, twist: BodyTwist) -> bool:
        w = self.world
        if not w.terrain.obstacles:
            return False
        if abs(twist.vx_mps) < 1e-9 and abs(twist.vy_mps) < 1e-9:
            return False
        pad = 0.05
        cy, sy = math.cos(w.pose.yaw_rad), math.sin(w.pose.yaw_rad)
        vwx = cy * twist.vx_mps - sy * twist.vy_mps
        vwy = sy * twist.vx_mps + cy * twist.vy_mps
        vmag = math.hypot(vwx, vwy)
        for ob in w.terrain.obstacles:
            if obstacle_check(ob.height_m, w.geometry.wheel_radius_m, self._thrust_margin(ob.height_m)):
                continue
            for (wx, wy) in w._contacts_world():
                d_now = ob.distance_outside(wx, wy)
                if d_now > pad + vmag * 0.5:
                    continue
                d_next = ob.distance_outside(wx + vwx * 0.1, wy + vwy * 0.1)
                if d_next < d_now - 1e-12 or d_now <= pad:
                    if not any(e.kind == "obstacle_blocked" for e in w.events):
                        w.events.append(
                            WorldEvent(w.time_s, "obstacle_blocked",
                                       f"obstacle height {ob.height_m:.3f} m not traversable")
                        )
                    return True
        return False

    def _thrust_margin(self, height_m: float) -> float:
        """Available/required thrust while climbing a step of this height."""
        w = self.world
        soil = w.terrain.soil
        n_i = (sum(w.loads_n) or w.total_mass() * GRAVITY) / 4.0
        available = soil.cohesion_force_n + n_i * soil.tan_friction
        if height_m <= 0.0:
            return math.inf
        required = 0.6 * n_i * (height_m / w.geometry.wheel_radius_m)
        return available / required

    def _terminate(self, kind: str, detail: str):
        w = self.world
        w.terminal = kind
        w.actual_twist = BodyTwist(0.0, 0.0, 0.0)
        w.events.append(WorldEvent(w.time_s, kind, detail))

    def maybe_track(self) -> TrackingMeasurement:
        """Emit a tracking measurement when its 60 Hz schedule is due."""
        w = self.world
        if w.time_s + 1e-12 >= self._next_tracking_t:
            self._last_tracking = tracking_emulate(
                w.pose,
                w.rng,
                w.time_s,
                self.config.tracking_sigma_pos_m,
                self.config.tracking_sigma_ang_rad,
            )
            self._next_tracking_t += 1.0 / self.config.tracking_rate_hz
        return self._last_tracking
