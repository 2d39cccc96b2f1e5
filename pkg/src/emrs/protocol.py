"""Wire schema of the teleoperation service.

Line-delimited JSON text frames over one duplex WebSocket.  Command frames
flow client to server, telemetry and error frames flow back.  Parsing is
strict: unknown types or fields, wrong value types and out-of-range values
are all rejected with MalformedMessage (the connection stays open; the
server answers with an error frame).

Units on the wire: metres per second for v, radians per second for omega,
radians for heading, degrees only for the tilt-bed angle.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Union

from .errors import MalformedMessage
from .manager import ChangeMode, EStop, ManagerCommand, Reset, Speed
from .telemetry import TelemetryFrame
from .terrain import MAX_TILT_RAD
from .types import (
    AckermannCommand,
    CrabCommand,
    LocomotionMode,
    PointTurnCommand,
    SkidCommand,
)

MAX_TILT_DEG = math.degrees(MAX_TILT_RAD)


@dataclass(frozen=True)
class LoadScenario:
    name: str


@dataclass(frozen=True)
class SetTilt:
    angle_deg: float


ClientCommand = Union[ManagerCommand, LoadScenario, SetTilt]

_MODE_NAMES = {m.value: m for m in LocomotionMode}

_SPEED_FIELDS = {
    LocomotionMode.ACKERMANN: ("v", "omega"),
    LocomotionMode.POINT_TURN: ("omega",),
    LocomotionMode.CRAB: ("v", "heading"),
    LocomotionMode.SKID: ("v", "omega"),
}


def _number(obj: dict, key: str) -> float:
    if key not in obj:
        raise MalformedMessage(f"missing field '{key}'")
    v = obj[key]
    if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
        raise MalformedMessage(f"field '{key}' must be a finite number")
    return float(v)


def _check_only(obj: dict, allowed: set[str]):
    extra = set(obj) - allowed
    if extra:
        raise MalformedMessage(f"unknown field(s): {', '.join(sorted(extra))}")


def decode_command(text: str) -> ClientCommand:
    """Parse one client text frame into a command."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedMessage(f"invalid JSON: {exc.msg}")
    if not isinstance(obj, dict):
        raise MalformedMessage("frame must be a JSON object")
    kind = obj.get("type")
    if not isinstance(kind, str):
        raise MalformedMessage("missing or invalid 'type'")

    if kind == "speed":
        mode_name = obj.get("mode")
        if mode_name not in _MODE_NAMES:
            raise MalformedMessage(f"unknown mode '{mode_name}'")
        mode = _MODE_NAMES[mode_name]
        fields = _SPEED_FIELDS[mode]
        _check_only(obj, {"type", "mode", *fields})
        vals = {f: _number(obj, f) for f in fields}
        if mode is LocomotionMode.ACKERMANN:
            return Speed(AckermannCommand(vals["v"], vals["omega"]))
        if mode is LocomotionMode.POINT_TURN:
            return Speed(PointTurnCommand(vals["omega"]))
        if mode is LocomotionMode.CRAB:
            if abs(vals["heading"]) > math.pi / 2 + 1e-12:
                raise MalformedMessage("crab heading must lie within +/- pi/2")
            return Speed(CrabCommand(vals["v"], vals["heading"]))
        return Speed(SkidCommand(vals["v"], vals["omega"]))

    if kind == "change_mode":
        _check_only(obj, {"type", "mode"})
        mode_name = obj.get("mode")
        if mode_name not in _MODE_NAMES:
            raise MalformedMessage(f"unknown mode '{mode_name}'")
        return ChangeMode(_MODE_NAMES[mode_name])

    if kind == "estop":
        _check_only(obj, {"type"})
        return EStop()

    if kind == "reset":
        _check_only(obj, {"type"})
        return Reset()

    if kind == "load_scenario":
        _check_only(obj, {"type", "name"})
        name = obj.get("name")
        if not isinstance(name, str) or not name:
            raise MalformedMessage("load_scenario needs a non-empty 'name'")
        if any(c in name for c in "/\\") or name.startswith("."):
            raise MalformedMessage("scenario name must be a bare name")
        return LoadScenario(name)

    if kind == "set_tilt":
        _check_only(obj, {"type", "angle_deg"})
        angle = _number(obj, "angle_deg")
        if not 0.0 <= angle <= MAX_TILT_DEG:
            raise MalformedMessage(
                f"tilt angle {angle} outside [0, {MAX_TILT_DEG:.0f}] deg"
            )
        return SetTilt(angle)

    raise MalformedMessage(f"unknown command type '{kind}'")


def _sig9(x: float) -> float:
    """Round to 9 significant digits, the wire float resolution."""
    return float(f"{x:.9g}")


def encode_telemetry(frame: TelemetryFrame) -> str:
    """Serialise a telemetry frame: stable field order, 9-digit floats."""
    d = {
        "type": "telemetry",
        "t_s": _sig9(frame.t_s),
        "phase": frame.phase,
        "mode": frame.mode,
        "fault_reason": frame.fault_reason,
        "cmd_twist": [_sig9(frame.cmd_vx_mps), _sig9(frame.cmd_vy_mps),
                      _sig9(frame.cmd_omega_radps)],
        "act_twist": [_sig9(frame.act_vx_mps), _sig9(frame.act_vy_mps),
                      _sig9(frame.act_omega_radps)],
        "steer_sp_rad": [_sig9(v) for v in frame.steer_angle_sp_rad],
        "steer_rad": [_sig9(v) for v in frame.steer_angle_rad],
        "speed_sp_radps": [_sig9(v) for v in frame.wheel_speed_sp_radps],
        "speed_radps": [_sig9(v) for v in frame.wheel_speed_radps],
        "drive_current_a": [_sig9(v) for v in frame.drive_current_a],
        "drive_temp_c": [_sig9(v) for v in frame.drive_temp_c],
        "steer_current_a": [_sig9(v) for v in frame.steer_current_a],
        "steer_temp_c": [_sig9(v) for v in frame.steer_temp_c],
        "slip": [_sig9(v) for v in frame.slip_ratio],
        "true_pose": [_sig9(frame.true_x_m), _sig9(frame.true_y_m),
                      _sig9(frame.true_yaw_rad), _sig9(frame.true_pitch_rad),
                      _sig9(frame.true_roll_rad)],
        "tracked_pose": [_sig9(frame.tracked_x_m), _sig9(frame.tracked_y_m),
                         _sig9(frame.tracked_yaw_rad)],
        "tracked_valid": frame.tracked_valid,
        "last_command_time": _sig9(frame.last_command_time),
        "last_commander": frame.last_commander,
    }
    return json.dumps(d, separators=(",", ":"))


def decode_telemetry(text: str) -> TelemetryFrame:
    """Inverse of encode_telemetry on the wire value space."""
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedMessage(f"invalid JSON: {exc.msg}")
    if not isinstance(d, dict) or d.get("type") != "telemetry":
        raise MalformedMessage("not a telemetry frame")
    try:
        return TelemetryFrame(
            t_s=d["t_s"],
            phase=d["phase"],
            mode=d["mode"],
            fault_reason=d["fault_reason"],
            cmd_vx_mps=d["cmd_twist"][0],
            cmd_vy_mps=d["cmd_twist"][1],
            cmd_omega_radps=d["cmd_twist"][2],
            act_vx_mps=d["act_twist"][0],
            act_vy_mps=d["act_twist"][1],
            act_omega_radps=d["act_twist"][2],
            steer_angle_sp_rad=tuple(d["steer_sp_rad"]),
            steer_angle_rad=tuple(d["steer_rad"]),
            wheel_speed_sp_radps=tuple(d["speed_sp_radps"]),
            wheel_speed_radps=tuple(d["speed_radps"]),
            drive_current_a=tuple(d["drive_current_a"]),
            drive_temp_c=tuple(d["drive_temp_c"]),
            steer_current_a=tuple(d["steer_current_a"]),
            steer_temp_c=tuple(d["steer_temp_c"]),
            slip_ratio=tuple(d["slip"]),
            true_x_m=d["true_pose"][0],
            true_y_m=d["true_pose"][1],
            true_yaw_rad=d["true_pose"][2],
            true_pitch_rad=d["true_pose"][3],
            true_roll_rad=d["true_pose"][4],
            tracked_x_m=d["tracked_pose"][0],
            tracked_y_m=d["tracked_pose"][1],
            tracked_yaw_rad=d["tracked_pose"][2],
            tracked_valid=d["tracked_valid"],
            last_command_time=d["last_command_time"],
            last_commander=d["last_commander"],
        )
    except (KeyError, IndexError, TypeError) as exc:
        raise MalformedMessage(f"telemetry frame malformed: {exc}")


def encode_error(code: str, detail: str) -> str:
    return json.dumps(
        {"type": "error", "code": code, "detail": detail}, separators=(",", ":")
    )


def encode_ack(applied: str) -> str:
    return json.dumps({"type": "ack", "applied": applied}, separators=(",", ":"))
