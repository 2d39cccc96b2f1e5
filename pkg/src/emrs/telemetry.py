"""Immutable telemetry snapshot shared by the simulator, the supervision
layer, the campaign harness and the teleoperation wire format."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .types import Four


@dataclass(frozen=True)
class TelemetryFrame:
    t_s: float
    phase: str
    mode: str
    fault_reason: Optional[str]
    # commanded vs achieved body motion
    cmd_vx_mps: float
    cmd_vy_mps: float
    cmd_omega_radps: float
    act_vx_mps: float
    act_vy_mps: float
    act_omega_radps: float
    # per-wheel observables, wheel order
    steer_angle_sp_rad: Four
    steer_angle_rad: Four
    wheel_speed_sp_radps: Four
    wheel_speed_radps: Four
    drive_current_a: Four
    drive_temp_c: Four
    steer_current_a: Four
    steer_temp_c: Four
    slip_ratio: Four
    # poses
    true_x_m: float
    true_y_m: float
    true_yaw_rad: float
    true_pitch_rad: float
    true_roll_rad: float
    tracked_x_m: float
    tracked_y_m: float
    tracked_yaw_rad: float
    tracked_valid: bool
    # freshness of the operator link
    last_command_time: float
    last_commander: str = ""
