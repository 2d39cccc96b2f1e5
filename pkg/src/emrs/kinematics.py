"""Per-mode inverse kinematics and forward odometry for a rover with four
independently steered wheels.

All wheels steer about pivots at the footprint corners, with the ground
contact displaced laterally from the pivot (on-side steering).  Because the
contact point moves as the wheel steers, steering angles for a commanded
instantaneous centre of rotation (ICR) are found by fixed-point iteration:
start from the zero-offset tangent angle, then re-evaluate the tangent at
the displaced contact until the angle settles.  A fine grid search backs the
iteration up so the solve stays total.

Forward odometry solves the body twist (vx, vy, omega) from the eight wheel
constraints in a weighted least-squares sense: each wheel's rolling-direction
constraint (contact velocity along the wheel equals rim speed) is trusted,
while its no-side-slip constraint only breaks ties the rolling constraints
leave open.  Modes whose wheels roll without side slip are recovered exactly;
skid steering, which scrubs sideways by design, recovers the yaw rate implied
by the effective track and reports the scrub as the residual.
"""

from __future__ import annotations

import math

from .errors import DegenerateGeometry, NonConvergence, SteeringLimitExceeded
from .types import (
    AckermannCommand,
    BodyMotionCommand,
    BodyTwist,
    CrabCommand,
    LocomotionMode,
    PointTurnCommand,
    Pose2p5,
    RoverGeometry,
    SkidCommand,
    Vec2,
    WheelSetpointArray,
    WheelStateArray,
    wrap_angle,
)

# Below this yaw rate an Ackermann command degenerates to a straight line.
OMEGA_EPS = 1e-6

_FP_TOL = 1e-9
_FP_MAX_ITER = 50
_GRID_STEP = 1e-5

# Weight of the no-side-slip rows relative to the rolling rows in the
# odometry normal equations (squared, so 1e-8 in the quadratic form).
_LATERAL_WEIGHT = 1e-4


def _signed_offset(pivot_y: float, geometry: RoverGeometry) -> float:
    return geometry.steering_offset_m if pivot_y >= 0 else -geometry.steering_offset_m


def contact_point(pivot: Vec2, steering_rad: float, geometry: RoverGeometry) -> Vec2:
    """Ground-contact point of an offset-steered wheel, body frame.

    The contact sits at ``pivot + R(steering) @ (0, d)`` where d is the
    per-wheel signed lateral offset (outboard for positive
    ``steering_offset_m``; the side is inferred from the pivot y sign).
    """
    d = _signed_offset(pivot[1], geometry)
    return (pivot[0] - d * math.sin(steering_rad), pivot[1] + d * math.cos(steering_rad))


def _fold(theta: float) -> tuple[float, float]:
    """Fold a travel direction into the +/-90 deg steering range.

    Returns (steering angle, rolling sense); sense -1 means the wheel spins
    backwards to produce the requested travel direction.
    """
    if theta > math.pi / 2:
        return theta - math.pi, -1.0
    if theta < -math.pi / 2:
        return theta + math.pi, -1.0
    return theta, 1.0


def _tangent_angle(contact: Vec2, icr: Vec2) -> tuple[float, float, float]:
    """Steering angle tangent to the circle about icr through contact.

    Returns (angle, sense, radius).  The travel direction is taken for
    positive yaw; negative yaw flips the wheel speed sign, not the angle.
    """
    rx = contact[0] - icr[0]
    ry = contact[1] - icr[1]
    radius = math.hypot(rx, ry)
    if radius < 1e-12:
        return 0.0, 1.0, 0.0
    angle, sense = _fold(math.atan2(rx, -ry))
    return angle, sense, radius


def _axis_distance(pivot: Vec2, angle: float, geometry: RoverGeometry, icr: Vec2) -> float:
    """Distance from icr to the wheel's steering-axis line at this angle."""
    cx, cy = contact_point(pivot, angle, geometry)
    s, c = math.sin(angle), math.cos(angle)
    # lateral direction (-sin, cos); cross of it with (icr - contact)
    return abs(-s * (icr[1] - cy) - c * (icr[0] - cx))


def _grid_solve(pivot: Vec2, geometry: RoverGeometry, icr: Vec2) -> tuple[float, float, float]:
    """Brute-force fallback: scan steering angles at _GRID_STEP resolution."""
    best_angle = 0.0
    best_dist = math.inf
    n = int(math.pi / _GRID_STEP) + 1
    for i in range(n):
        angle = -math.pi / 2 + i * _GRID_STEP
        d = _axis_distance(pivot, angle, geometry, icr)
        if d < best_dist:
            best_dist = d
            best_angle = angle
    scale = max(1.0, math.hypot(*icr))
    if best_dist > 1e-3 * scale:
        raise NonConvergence(
            f"no tangent steering angle found for pivot {pivot} about ICR {icr}"
        )
    contact = contact_point(pivot, best_angle, geometry)
    _, sense, radius = _tangent_angle(contact, icr)
    return best_angle, sense, radius


def _solve_wheel(pivot: Vec2, geometry: RoverGeometry, icr: Vec2) -> tuple[float, float, float]:
    """Steering angle, rolling sense and turn radius for one wheel.

    Fixed-point iteration on the offset contact; grid search on
    non-convergence.
    """
    angle, sense, radius = _tangent_angle(pivot, icr)
    if geometry.steering_offset_m == 0.0:
        return angle, sense, radius
    for _ in range(_FP_MAX_ITER):
        c = contact_point(pivot, angle, geometry)
        new_angle, new_sense, radius = _tangent_angle(c, icr)
        if abs(new_angle - angle) < _FP_TOL and new_sense == sense:
            return new_angle, new_sense, radius
        angle, sense = new_angle, new_sense
    return _grid_solve(pivot, geometry, icr)


def _check_limit(angle: float, geometry: RoverGeometry) -> float:
    if abs(angle) > geometry.steering_limit_rad + 1e-12:
        raise SteeringLimitExceeded(
            f"required steering angle {angle:.4f} rad exceeds "
            f"+/-{geometry.steering_limit_rad:.4f} rad"
        )
    return angle


def _icr_setpoints(
    icr: Vec2, omega: float, geometry: RoverGeometry
) -> WheelSetpointArray:
    angles = []
    speeds = []
    for pivot in geometry.pivot_positions:
        angle, sense, radius = _solve_wheel(pivot, geometry, icr)
        angles.append(_check_limit(angle, geometry))
        speeds.append(sense * radius * omega / geometry.wheel_radius_m)
    return WheelSetpointArray(tuple(angles), tuple(speeds))


def inverse_kinematics(
    mode: LocomotionMode, cmd: BodyMotionCommand, geometry: RoverGeometry
) -> WheelSetpointArray:
    """Convert a body-level motion command into per-wheel setpoints.

    Args:
        mode: active locomotion mode; must match the command variant.
        cmd: body motion command within configured limits.
        geometry: rover footprint and steering geometry.

    Returns:
        Steering angles and signed wheel spin rates, wheel order.

    Raises:
        SteeringLimitExceeded: a wheel would need to steer past the limit.
        NonConvergence: the offset solve failed even through the fallback.
        ValueError: command variant does not match the mode.
    """
    if cmd.mode is not mode:
        raise ValueError(f"command variant {cmd.mode.value} does not match mode {mode.value}")
    r = geometry.wheel_radius_m

    if mode is LocomotionMode.CRAB:
        assert isinstance(cmd, CrabCommand)
        heading = _check_limit(cmd.heading_rad, geometry)
        w = cmd.v_mps / r
        return WheelSetpointArray((heading,) * 4, (w, w, w, w))

    if mode is LocomotionMode.SKID:
        assert isinstance(cmd, SkidCommand)
        # lever arm is the lateral contact distance, which the on-side
        # offset pushes outboard of the pivot track
        half = geometry.skid_correction * (geometry.track_m / 2 + geometry.steering_offset_m)
        left = (cmd.v_mps - cmd.omega_radps * half) / r
        right = (cmd.v_mps + cmd.omega_radps * half) / r
        return WheelSetpointArray((0.0, 0.0, 0.0, 0.0), (left, right, left, right))

    if mode is LocomotionMode.POINT_TURN:
        assert isinstance(cmd, PointTurnCommand)
        return _icr_setpoints((0.0, 0.0), cmd.omega_radps, geometry)

    assert isinstance(cmd, AckermannCommand)
    if abs(cmd.omega_radps) < OMEGA_EPS:
        w = cmd.v_mps / r
        return WheelSetpointArray((0.0, 0.0, 0.0, 0.0), (w, w, w, w))
    icr = (0.0, cmd.v_mps / cmd.omega_radps)
    return _icr_setpoints(icr, cmd.omega_radps, geometry)


def forward_odometry(
    wheels: WheelStateArray,
    geometry: RoverGeometry,
    lateral_weight: float = _LATERAL_WEIGHT,
) -> tuple[BodyTwist, float]:
    """Recover the body twist from measured wheel states.

    Solves the 8-constraint least squares described in the module docstring
    and returns the twist together with the unweighted RMS constraint
    violation (m/s), which is zero when the wheel states are kinematically
    consistent and measures lateral scrub otherwise.

    Args:
        wheels: measured steering angles and wheel spin rates.
        geometry: rover geometry used to place the contacts.
        lateral_weight: relative weight of the no-side-slip rows; pass 0 to
            drop them entirely (the solve may then be degenerate).

    Raises:
        DegenerateGeometry: the normal matrix is singular.
    """
    rows = []
    rhs = []
    r = geometry.wheel_radius_m
    for i, pivot in enumerate(geometry.pivot_positions):
        beta = wheels.steering_rad[i]
        cx, cy = contact_point(pivot, beta, geometry)
        cb, sb = math.cos(beta), math.sin(beta)
        # rolling direction: velocity along the wheel equals rim speed
        rows.append((cb, sb, cx * sb - cy * cb, 1.0))
        rhs.append(wheels.speed_radps[i] * r)
        # lateral direction: no side slip (tie-breaker)
        rows.append((-sb, cb, cx * cb + cy * sb, lateral_weight))
        rhs.append(0.0)

    # accumulate weighted normal equations
    m00 = m01 = m02 = m11 = m12 = m22 = 0.0
    b0 = b1 = b2 = 0.0
    for (a0, a1, a2, w), y in zip(rows, rhs):
        w2 = w * w
        m00 += w2 * a0 * a0
        m01 += w2 * a0 * a1
        m02 += w2 * a0 * a2
        m11 += w2 * a1 * a1
        m12 += w2 * a1 * a2
        m22 += w2 * a2 * a2
        b0 += w2 * a0 * y
        b1 += w2 * a1 * y
        b2 += w2 * a2 * y

    det = (
        m00 * (m11 * m22 - m12 * m12)
        - m01 * (m01 * m22 - m12 * m02)
        + m02 * (m01 * m12 - m11 * m02)
    )
    scale = max(m00, m11, m22, 1e-30)
    if abs(det) < 1e-14 * scale**3:
        raise DegenerateGeometry("odometry normal matrix is singular")

    inv = 1.0 / det
    vx = inv * (
        b0 * (m11 * m22 - m12 * m12)
        - m01 * (b1 * m22 - m12 * b2)
        + m02 * (b1 * m12 - m11 * b2)
    )
    vy = inv * (
        m00 * (b1 * m22 - b2 * m12)
        - b0 * (m01 * m22 - m12 * m02)
        + m02 * (m01 * b2 - b1 * m02)
    )
    om = inv * (
        m00 * (m11 * b2 - m12 * b1)
        - m01 * (m01 * b2 - m12 * b0)
        + b0 * (m01 * m12 - m11 * m02)
    )

    sq = 0.0
    for (a0, a1, a2, _), y in zip(rows, rhs):
        e = a0 * vx + a1 * vy + a2 * om - y
        sq += e * e
    residual = math.sqrt(sq / len(rows))
    return BodyTwist(vx, vy, om), residual


def integrate_pose(pose: Pose2p5, twist: BodyTwist, dt: float) -> Pose2p5:
    """Exact constant-twist (unicycle) pose integration over dt seconds."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    vx, vy, om = twist.vx_mps, twist.vy_mps, twist.omega_radps
    cy, sy = math.cos(pose.yaw_rad), math.sin(pose.yaw_rad)
    dpsi = om * dt
    if abs(dpsi) < 1e-9:
        bx = vx * dt
        by = vy * dt
    else:
        sd = math.sin(dpsi) / om
        cd = (1.0 - math.cos(dpsi)) / om
        bx = sd * vx - cd * vy
        by = cd * vx + sd * vy
    return Pose2p5(
        pose.x_m + cy * bx - sy * by,
        pose.y_m + sy * bx + cy * by,
        wrap_angle(pose.yaw_rad + dpsi),
        pose.pitch_rad,
        pose.roll_rad,
    )


def icr_residual(
    setpoints: WheelSetpointArray, geometry: RoverGeometry, icr: Vec2
) -> float:
    """RMS distance (m) from icr to each wheel's steering-axis line.

    Zero iff the setpoints are kinematically consistent about that ICR.
    """
    sq = 0.0
    for i, pivot in enumerate(geometry.pivot_positions):
        d = _axis_distance(pivot, setpoints.steering_rad[i], geometry, icr)
        sq += d * d
    return math.sqrt(sq / 4.0)
