"""Core value types for the locomotion stack.

Conventions (normative for the whole package):

* body frame: x forward, y left, z up; yaw positive counter-clockwise
* wheel order: 0 front-left, 1 front-right, 2 rear-left, 3 rear-right
* angles in radians, lengths in metres, masses in kilograms
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import ClassVar, Union

Vec2 = tuple[float, float]
Four = tuple[float, float, float, float]


class LocomotionMode(str, Enum):
    ACKERMANN = "ackermann"
    POINT_TURN = "point_turn"
    CRAB = "crab"
    SKID = "skid"


@dataclass(frozen=True)
class RoverGeometry:
    """Chassis footprint, wheel and steering-pivot layout, mass properties.

    The steering pivots sit at the footprint corners; the wheel contact is
    displaced laterally from its pivot by ``steering_offset_m`` (positive
    values point outboard on both sides), so the contact point swings as
    the wheel steers.
    """

    wheelbase_m: float
    track_m: float
    wheel_radius_m: float
    steering_offset_m: float = 0.0
    steering_limit_rad: float = math.pi / 2
    chassis_mass_kg: float = 250.0
    payload_mass_kg: float = 0.0
    cog_body: tuple[float, float, float] = (0.0, 0.0, 0.35)
    skid_correction: float = 1.0  # effective-track multiplier for skid mode

    def __post_init__(self):
        if self.wheelbase_m <= 0 or self.track_m <= 0 or self.wheel_radius_m <= 0:
            raise ValueError("wheelbase_m, track_m and wheel_radius_m must be positive")
        if abs(self.steering_offset_m) >= self.track_m / 2:
            raise ValueError("steering_offset_m must stay inside the half-track")
        if not 0.0 < self.steering_limit_rad <= math.pi:
            raise ValueError("steering_limit_rad must lie in (0, pi]")
        if self.chassis_mass_kg <= 0:
            raise ValueError("chassis_mass_kg must be positive")
        if self.payload_mass_kg < 0:
            raise ValueError("payload_mass_kg must be non-negative")
        if self.skid_correction <= 0:
            raise ValueError("skid_correction must be positive")

    @property
    def pivot_positions(self) -> tuple[Vec2, Vec2, Vec2, Vec2]:
        """Steering pivot (x, y) per wheel in body frame, wheel order."""
        a = self.wheelbase_m / 2
        b = self.track_m / 2
        return ((a, b), (a, -b), (-a, b), (-a, -b))

    @property
    def signed_offsets(self) -> Four:
        """Per-wheel lateral contact offset, signed so positive points outboard."""
        d = self.steering_offset_m
        return (d, -d, d, -d)


@dataclass(frozen=True)
class AckermannCommand:
    """Drive along an arc: forward speed plus yaw rate."""

    v_mps: float
    omega_radps: float
    mode: ClassVar[LocomotionMode] = LocomotionMode.ACKERMANN


@dataclass(frozen=True)
class PointTurnCommand:
    """Rotate in place about the body centre."""

    omega_radps: float
    mode: ClassVar[LocomotionMode] = LocomotionMode.POINT_TURN


@dataclass(frozen=True)
class CrabCommand:
    """Translate without yawing along a body-frame heading."""

    v_mps: float
    heading_rad: float
    mode: ClassVar[LocomotionMode] = LocomotionMode.CRAB


@dataclass(frozen=True)
class SkidCommand:
    """Differential-drive style motion with unsteered wheels."""

    v_mps: float
    omega_radps: float
    mode: ClassVar[LocomotionMode] = LocomotionMode.SKID


BodyMotionCommand = Union[AckermannCommand, PointTurnCommand, CrabCommand, SkidCommand]


def zero_command(mode: LocomotionMode) -> BodyMotionCommand:
    """Zero-speed command of the given mode."""
    if mode is LocomotionMode.ACKERMANN:
        return AckermannCommand(0.0, 0.0)
    if mode is LocomotionMode.POINT_TURN:
        return PointTurnCommand(0.0)
    if mode is LocomotionMode.CRAB:
        return CrabCommand(0.0, 0.0)
    return SkidCommand(0.0, 0.0)


@dataclass(frozen=True)
class WheelSetpointArray:
    """Commanded steering angle and signed wheel spin rate per wheel."""

    steering_rad: Four
    speed_radps: Four

    @classmethod
    def zero(cls) -> "WheelSetpointArray":
        return cls((0.0, 0.0, 0.0, 0.0), (0.0, 0.0, 0.0, 0.0))


@dataclass(frozen=True)
class WheelStateArray(WheelSetpointArray):
    """Measured steering angle and wheel spin rate per wheel."""


@dataclass(frozen=True)
class BodyTwist:
    vx_mps: float
    vy_mps: float
    omega_radps: float

    def speed(self) -> float:
        return math.hypot(self.vx_mps, self.vy_mps)


@dataclass(frozen=True)
class Pose2p5:
    """Planar pose plus terrain-induced attitude.

    pitch is positive nose-up, roll positive left-side-up; both are
    read-only outputs of the simulator, never integrated.
    """

    x_m: float = 0.0
    y_m: float = 0.0
    yaw_rad: float = 0.0
    pitch_rad: float = 0.0
    roll_rad: float = 0.0

    def __post_init__(self):
        if not -math.pi < self.yaw_rad <= math.pi:
            object.__setattr__(self, "yaw_rad", wrap_angle(self.yaw_rad))


def wrap_angle(a: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    a = math.fmod(a, 2.0 * math.pi)
    if a <= -math.pi:
        a += 2.0 * math.pi
    elif a > math.pi:
        a -= 2.0 * math.pi
    return a
