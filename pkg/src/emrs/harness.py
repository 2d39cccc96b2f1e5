"""Declarative test-campaign runner.

A campaign file lists cases; each case names a scenario, a manoeuvre and
its pass criteria.  The runner drives the locomotion manager exactly the
way a teleoperator would (speed commands re-issued at 20 Hz, mode changes
waited out), collects metrics at the telemetry rate and grades the result.
Cases are independent and deterministic: the per-case generator stream is
derived from the campaign seed and the case id, so a (campaign, seed) pair
always produces byte-identical reports.
"""

from __future__ import annotations

import csv
import json
import math
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .errors import EmrsError, SchemaViolation
from .manager import (
    ChangeMode,
    HealthSupervisor,
    LocomotionManager,
    Phase,
    Speed,
)
from .scenario import Scenario, _load_yaml, _Section, load_scenario, resolve_ref
from .sim import ManagerOutput, Simulator
from .telemetry import TelemetryFrame
from .terrain import Obstacle
from .types import (
    AckermannCommand,
    BodyMotionCommand,
    BodyTwist,
    CrabCommand,
    LocomotionMode,
    PointTurnCommand,
    Pose2p5,
    SkidCommand,
    zero_command,
)


@dataclass(frozen=True)
class RequirementConstants:
    """Mission requirement constants the campaign reports against."""

    min_traverse_speed_mps: float = 0.025
    max_static_pitch_roll_deg: float = 15.0
    isru_payload_kg: float = 300.0
    isru_cycles: int = 42
    isru_total_kg: float = 12600.0

    def __post_init__(self):
        if self.isru_total_kg != self.isru_payload_kg * self.isru_cycles:
            raise ValueError("isru_total_kg must equal isru_payload_kg * isru_cycles")


REQUIREMENTS = RequirementConstants()

SLOPE_ANGLES_DEG = (5.0, 10.0, 15.0, 20.0, 25.0)

# ordered visit of all 12 directed mode pairs, starting and ending on
# ackermann (the manager's initial mode)
MODE_CIRCUIT = (
    LocomotionMode.ACKERMANN,
    LocomotionMode.POINT_TURN,
    LocomotionMode.ACKERMANN,
    LocomotionMode.CRAB,
    LocomotionMode.ACKERMANN,
    LocomotionMode.SKID,
    LocomotionMode.POINT_TURN,
    LocomotionMode.CRAB,
    LocomotionMode.POINT_TURN,
    LocomotionMode.SKID,
    LocomotionMode.CRAB,
    LocomotionMode.SKID,
    LocomotionMode.ACKERMANN,
)


# -- campaign model ----------------------------------------------------------


@dataclass
class CampaignCase:
    id: str
    scenario_ref: str
    manoeuvre: dict
    criteria: dict
    tilt_angle_deg: float = 0.0
    payload_kg: Optional[float] = None
    blade_drag_n: Optional[float] = None


@dataclass
class Campaign:
    name: str
    seed: int
    cases: list[CampaignCase]
    source: Path


MANOEUVRE_FAMILIES = {
    "mode_matrix": "locomotion_modes",
    "flat_traverse": "flat_surface",
    "up_slope": "up_slope",
    "cross_slope": "cross_slope",
    "point_turn_on_slope": "up_slope",  # slope-area manoeuvre
    "obstacle_run": "obstacle_clearing",
    "excavation": "excavation",
}

_CRITERIA_FIELDS = {
    "speed_tol_frac": float,
    "max_drift_frac": float,
    "max_mean_slip": float,
    "min_progress_frac": float,
    "yaw_eff_min": float,
    "yaw_eff_max": float,
    "expect_significant_slip": bool,
    "expect_blocked": bool,
    "max_current_a": float,
    "max_temp_c": float,
    "require_all_transitions": bool,
}


def _parse_manoeuvre(sec: _Section) -> dict:
    kind = sec.get("type", str, required=True)
    m: dict = {"type": kind}
    if kind == "mode_matrix":
        m["dwell_s"] = sec.get("dwell_s", float, default=2.0, low=0.1)
    elif kind == "flat_traverse":
        segs = sec.get("segments", list, required=True)
        out = []
        for i, s in enumerate(segs):
            ss = _Section(s, f"{sec.path}.segments[{i}]")
            out.append(
                {
                    "speed_mps": ss.get("speed_mps", float, required=True, low=1e-4),
                    "distance_m": ss.get("distance_m", float, required=True, low=0.01),
                }
            )
            ss.finish()
        if not out:
            raise SchemaViolation("needs at least one segment", f"{sec.path}.segments")
        m["segments"] = out
    elif kind in ("up_slope", "cross_slope"):
        m["speed_mps"] = sec.get("speed_mps", float, required=True, low=1e-4)
        if kind == "up_slope":
            m["approach_m"] = sec.get("approach_m", float, default=2.1, low=0.0)
            m["climb_m"] = sec.get("climb_m", float, default=1.4, low=0.1)
        else:
            m["distance_m"] = sec.get("distance_m", float, required=True, low=0.1)
    elif kind == "point_turn_on_slope":
        m["omega_radps"] = sec.get("omega_radps", float, required=True, low=1e-4)
        m["turn_deg"] = sec.get("turn_deg", float, default=90.0, low=1.0)
    elif kind == "obstacle_run":
        m["speed_mps"] = sec.get("speed_mps", float, required=True, low=1e-4)
        m["heights_frac_r"] = sec.get("heights_frac_r", list, required=True)
        for h in m["heights_frac_r"]:
            if not isinstance(h, (int, float)) or h < 0:
                raise SchemaViolation("heights must be non-negative numbers",
                                      f"{sec.path}.heights_frac_r")
        m["spacing_m"] = sec.get("spacing_m", float, default=1.2, low=0.5)
        m["run_m"] = sec.get("run_m", float, default=4.0, low=0.5)
    elif kind == "excavation":
        m["speed_mps"] = sec.get("speed_mps", float, required=True, low=1e-4)
        m["distance_m"] = sec.get("distance_m", float, required=True, low=0.1)
    else:
        raise SchemaViolation(f"unknown manoeuvre type '{kind}'", f"{sec.path}.type")
    sec.finish()
    return m


def load_campaign(path: str | Path) -> Campaign:
    """Load and fully validate a campaign file; unknown fields rejected."""
    path = Path(path)
    doc = _load_yaml(path)
    root = _Section(doc, "campaign")
    kind = root.get("kind", str, required=True)
    if kind != "campaign":
        raise SchemaViolation("kind must be 'campaign'", "campaign.kind")
    name = root.get("name", str, required=True)
    root.get("description", str, default="")
    seed = root.get("seed", int, default=0, low=0)
    raw_cases = root.get("cases", list, required=True)
    if not raw_cases:
        raise SchemaViolation("campaign has no cases", "campaign.cases")

    cases = []
    ids = set()
    for i, rc in enumerate(raw_cases):
        cs = _Section(rc, f"campaign.cases[{i}]")
        cid = cs.get("id", str, required=True)
        if cid in ids:
            raise SchemaViolation(f"duplicate case id '{cid}'", cs.path)
        ids.add(cid)
        scenario_ref = cs.get("scenario", str, required=True)
        tilt = cs.get("tilt_angle_deg", float, default=0.0, low=0.0, high=30.0)
        payload = cs.get("payload_kg", float, default=None, low=0.0, high=300.0)
        drag = cs.get("blade_drag_n", float, default=None, low=0.0)
        man = _parse_manoeuvre(cs.child("manoeuvre"))
        crit_sec = cs.child("pass_criteria", required=False)
        criteria: dict = {}
        if crit_sec is not None:
            for key, kindc in _CRITERIA_FIELDS.items():
                val = crit_sec.get(key, kindc)
                if val is not None:
                    criteria[key] = val
            crit_sec.finish()
        cs.finish()
        cases.append(
            CampaignCase(
                id=cid,
                scenario_ref=scenario_ref,
                manoeuvre=man,
                criteria=criteria,
                tilt_angle_deg=tilt,
                payload_kg=payload,
                blade_drag_n=drag,
            )
        )
    root.finish()
    return Campaign(name=name, seed=seed, cases=cases, source=path)


def case_seed(campaign_seed: int, case_id: str) -> int:
    """Stable per-case stream seed, independent of case order."""
    return zlib.crc32(f"{campaign_seed}:{case_id}".encode())


# -- manoeuvre scripting -----------------------------------------------------


@dataclass
class DrivePhase:
    command: BodyMotionCommand
    duration_s: float
    label: Optional[str] = None


@dataclass
class ModeChangePhase:
    mode: LocomotionMode


@dataclass
class PausePhase:
    duration_s: float


@dataclass
class Plan:
    phases: list
    start_pose: Optional[Pose2p5] = None
    obstacles: list[Obstacle] = field(default_factory=list)


def _cmd_twist(cmd: BodyMotionCommand) -> BodyTwist:
    if isinstance(cmd, AckermannCommand):
        return BodyTwist(cmd.v_mps, 0.0, cmd.omega_radps)
    if isinstance(cmd, PointTurnCommand):
        return BodyTwist(0.0, 0.0, cmd.omega_radps)
    if isinstance(cmd, CrabCommand):
        return BodyTwist(
            cmd.v_mps * math.cos(cmd.heading_rad),
            cmd.v_mps * math.sin(cmd.heading_rad),
            0.0,
        )
    return BodyTwist(cmd.v_mps, 0.0, cmd.omega_radps)


def plan_case(case: CampaignCase, scenario: Scenario) -> Plan:
    m = case.manoeuvre
    kind = m["type"]
    size_x, size_y = scenario.terrain_size
    hinge = scenario.tilt_hinge_x_m

    if kind == "mode_matrix":
        phases: list = []
        small = {
            LocomotionMode.ACKERMANN: AckermannCommand(0.05, 0.05),
            LocomotionMode.POINT_TURN: PointTurnCommand(0.15),
            LocomotionMode.CRAB: CrabCommand(0.05, 0.3),
            LocomotionMode.SKID: SkidCommand(0.05, 0.05),
        }
        for target in MODE_CIRCUIT[1:]:
            phases.append(ModeChangePhase(target))
            phases.append(DrivePhase(small[target], m["dwell_s"], label=f"dwell_{target.value}"))
        return Plan(phases, start_pose=Pose2p5(size_x / 2, size_y / 2, 0.0))

    if kind == "flat_traverse":
        phases = []
        for i, seg in enumerate(m["segments"]):
            phases.append(
                DrivePhase(
                    AckermannCommand(seg["speed_mps"], 0.0),
                    seg["distance_m"] / seg["speed_mps"],
                    label=f"segment_{i}",
                )
            )
        total = sum(s["distance_m"] for s in m["segments"])
        margin = 1.2
        if total + 2 * margin > size_x:
            raise SchemaViolation(
                f"flat traverse of {total} m does not fit the {size_x} m bed",
                f"case[{case.id}].manoeuvre",
            )
        return Plan(phases, start_pose=Pose2p5(margin, size_y / 2, 0.0))

    if kind == "up_slope":
        if hinge is None:
            raise SchemaViolation("scenario has no tilt bed", f"case[{case.id}].scenario")
        speed = m["speed_mps"]
        approach, climb = m["approach_m"], m["climb_m"]
        start_x = hinge - approach - 0.6
        phases = [
            DrivePhase(AckermannCommand(speed, 0.0), (approach + 1.2) / speed, label="approach"),
            DrivePhase(AckermannCommand(speed, 0.0), climb / speed, label="climb"),
        ]
        return Plan(phases, start_pose=Pose2p5(start_x, size_y / 2, 0.0))

    if kind == "cross_slope":
        if hinge is None:
            raise SchemaViolation("scenario has no tilt bed", f"case[{case.id}].scenario")
        speed = m["speed_mps"]
        dist = m["distance_m"]
        start = Pose2p5(hinge + 1.1, 1.2, math.pi / 2)
        phases = [DrivePhase(AckermannCommand(speed, 0.0), dist / speed, label="contour")]
        return Plan(phases, start_pose=start)

    if kind == "point_turn_on_slope":
        if hinge is None:
            raise SchemaViolation("scenario has no tilt bed", f"case[{case.id}].scenario")
        omega = m["omega_radps"]
        turn_s = math.radians(m["turn_deg"]) / omega
        phases = [
            ModeChangePhase(LocomotionMode.POINT_TURN),
            DrivePhase(PointTurnCommand(omega), turn_s, label="turn"),
        ]
        return Plan(phases, start_pose=Pose2p5(hinge + 1.3, size_y / 2, 0.0))

    if kind == "obstacle_run":
        speed = m["speed_mps"]
        run = m["run_m"]
        start = Pose2p5(1.2, size_y / 2, 0.0)
        obstacles = []
        r = scenario.geometry.wheel_radius_m
        x = start.x_m + 1.5
        for frac in m["heights_frac_r"]:
            obstacles.append(
                Obstacle(
                    polygon=(
                        (x, size_y / 2 - 1.2),
                        (x + 0.3, size_y / 2 - 1.2),
                        (x + 0.3, size_y / 2 + 1.2),
                        (x, size_y / 2 + 1.2),
                    ),
                    height_m=frac * r,
                )
            )
            x += m["spacing_m"]
        phases = [DrivePhase(AckermannCommand(speed, 0.0), run / speed, label="run")]
        return Plan(phases, start_pose=start, obstacles=obstacles)

    if kind == "excavation":
        speed = m["speed_mps"]
        dist = m["distance_m"]
        start = Pose2p5(size_x / 2 - dist / 2, size_y / 2, 0.0)
        phases = [
            DrivePhase(AckermannCommand(speed, 0.0), dist / speed, label="haul_out"),
            PausePhase(2.0),
            DrivePhase(AckermannCommand(-speed, 0.0), dist / speed, label="haul_back"),
        ]
        return Plan(phases, start_pose=start)

    raise SchemaViolation(f"unknown manoeuvre type '{kind}'", f"case[{case.id}]")


# -- runner -------------------------------------------------------------------


@dataclass
class WindowMetrics:
    label: str
    t0_s: float
    t1_s: float
    commanded_speed_mps: float
    commanded_omega_radps: float
    progress_m: float
    mean_speed_mps: float
    drift_max_m: float
    slip_mean: float
    slip_max: float
    yaw_change_rad: float
    yaw_efficiency: Optional[float]


@dataclass
class TestReport:
    id: str
    scenario: str
    seed: int
    manoeuvre: dict
    metrics: dict
    verdict: str
    flags: list[str]
    failures: list[str]
    trace_ref: str
    ticks: list[TelemetryFrame] = field(default_factory=list, repr=False)

    def to_json_dict(self) -> dict:
        return {
            "id": self.id,
            "scenario": self.scenario,
            "seed": self.seed,
            "manoeuvre": self.manoeuvre,
            "metrics": self.metrics,
            "verdict": self.verdict,
            "flags": self.flags,
            "failures": self.failures,
            "trace_ref": self.trace_ref,
        }


CONTROL_DT = 0.01
COMMAND_EVERY = 5          # 20 Hz joystick cadence
TELEMETRY_EVERY = 5        # 20 Hz telemetry
TRANSITION_GRACE_S = 2.0


class CaseRunner:
    """Owns one private world and drives one case to a report."""

    def __init__(self, case: CampaignCase, scenario: Scenario, seed: int):
        self.case = case
        self.scenario = scenario
        self.seed = seed
        self.plan = plan_case(case, scenario)
        self.world = scenario.build_world(
            seed=seed,
            tilt_angle_rad=math.radians(case.tilt_angle_deg),
            obstacles=self.plan.obstacles,
            payload_kg=case.payload_kg,
            blade_drag_n=case.blade_drag_n,
            start_pose=self.plan.start_pose,
        )
        self.sim = Simulator(self.world)
        self.manager = LocomotionManager(scenario.geometry, scenario.manager_config)
        self.supervisor = HealthSupervisor(scenario.safety)
        self.frames: list[TelemetryFrame] = []
        self.windows: list[WindowMetrics] = []
        self.transitions_done = 0
        self.transitions_expected = 0
        self.reconfig_speed_violations = 0
        self.failures: list[str] = []

    # one control tick: issue commands, advance manager + sim, sample
    def _tick(self, k: int, command: Optional[BodyMotionCommand]):
        now = k * CONTROL_DT
        if command is not None and k % COMMAND_EVERY == 0:
            self.manager.handle_command(Speed(command), now)
        sp = self.manager.tick(now)
        if self.manager.phase is Phase.RECONFIGURING and any(
            s != 0.0 for s in sp.speed_radps
        ):
            self.reconfig_speed_violations += 1
        st = self.manager.state()
        cmd_twist = _cmd_twist(command) if (
            command is not None and st.phase is Phase.DRIVING
        ) else BodyTwist(0.0, 0.0, 0.0)
        out = ManagerOutput(
            sp.steering_rad,
            sp.speed_radps,
            self.manager.mode,
            cmd_twist,
            st.phase is Phase.DRIVING,
        )
        for _ in range(self.sim.config.control_every):
            self.sim.step(out)
        if k % TELEMETRY_EVERY == 0:
            tracked = self.sim.maybe_track()
            frame = self.world.telemetry_frame(
                st.phase,
                self.manager.mode,
                st.fault_reason,
                out,
                tracked,
                self.manager.last_command_time,
            )
            self.frames.append(frame)
            verdict = self.supervisor.check(frame, now)
            if not verdict.healthy and self.manager.phase is not Phase.FAULT:
                self.manager.force_fault(verdict.reason, now)
        return k + 1

    def _wait_transition(self, k: int, target: LocomotionMode) -> int:
        """Issue the mode change and heartbeat until the manager drives."""
        now = k * CONTROL_DT
        self.manager.handle_command(ChangeMode(target), now)
        self.transitions_expected += 1
        deadline = None
        heartbeat = zero_command(target)
        while True:
            st = self.manager.state()
            if st.phase is Phase.FAULT:
                self.failures.append(f"fault during transition to {target.value}: "
                                     f"{st.fault_reason}")
                return k
            if deadline is None and st.phase is Phase.RECONFIGURING:
                deadline = self._traj_deadline(k)
            if st.phase is Phase.DRIVING:
                # require the steering to have truly arrived
                max_err = max(
                    abs(a - b)
                    for a, b in zip(self.world.steer_angles,
                                    self.manager._emitted)
                )
                if max_err < 0.05:
                    self.transitions_done += 1
                    return k
            if deadline is not None and k > deadline:
                self.failures.append(f"TransitionTimeout to {target.value}")
                return k
            k = self._tick(k, heartbeat)

    def _traj_deadline(self, k: int) -> int:
        st = self.manager.state()
        return k + int((st.reconfig_duration_s + TRANSITION_GRACE_S) / CONTROL_DT)

    def _drive(self, k: int, phase: DrivePhase) -> int:
        start_pose = self.world.pose
        t0 = self.world.time_s
        slip_sum = 0.0
        slip_n = 0
        slip_max = 0.0
        drift_max = 0.0
        yaw0 = start_pose.yaw_rad
        yaw_acc = 0.0
        last_yaw = yaw0
        tw = _cmd_twist(phase.command)
        # world-frame direction of intended motion at window start
        sp_mag = math.hypot(tw.vx_mps, tw.vy_mps)
        if sp_mag > 1e-12:
            ang = start_pose.yaw_rad + math.atan2(tw.vy_mps, tw.vx_mps)
            dirx, diry = math.cos(ang), math.sin(ang)
        else:
            dirx = diry = 0.0

        end_k = k + int(round(phase.duration_s / CONTROL_DT))
        while k < end_k:
            k = self._tick(k, phase.command)
            if self.manager.phase is Phase.FAULT:
                self.failures.append(f"fault during {phase.label or 'drive'}: "
                                     f"{self.manager.fault_reason}")
                break
            s = self.world.slip
            slip_sum += sum(s) / 4.0
            slip_max = max(slip_max, max(s))
            slip_n += 1
            dx = self.world.pose.x_m - start_pose.x_m
            dy = self.world.pose.y_m - start_pose.y_m
            if sp_mag > 1e-12:
                drift = abs(-diry * dx + dirx * dy)
                drift_max = max(drift_max, drift)
            yaw_acc += _ang_diff(self.world.pose.yaw_rad, last_yaw)
            last_yaw = self.world.pose.yaw_rad

        dx = self.world.pose.x_m - start_pose.x_m
        dy = self.world.pose.y_m - start_pose.y_m
        progress = dx * dirx + dy * diry if sp_mag > 1e-12 else 0.0
        duration = self.world.time_s - t0
        yaw_eff = None
        if abs(tw.omega_radps) > 1e-12 and duration > 0:
            yaw_eff = max(0.0, yaw_acc / (tw.omega_radps * duration))
        self.windows.append(
            WindowMetrics(
                label=phase.label or "drive",
                t0_s=t0,
                t1_s=self.world.time_s,
                commanded_speed_mps=sp_mag,
                commanded_omega_radps=tw.omega_radps,
                progress_m=progress,
                mean_speed_mps=progress / duration if duration > 0 else 0.0,
                drift_max_m=drift_max,
                slip_mean=slip_sum / slip_n if slip_n else 0.0,
                slip_max=slip_max,
                yaw_change_rad=yaw_acc,
                yaw_efficiency=yaw_eff,
            )
        )
        return k

    def run(self) -> TestReport:
        k = 0
        for phase in self.plan.phases:
            if self.manager.phase is Phase.FAULT or self.world.terminal:
                break
            if isinstance(phase, ModeChangePhase):
                k = self._wait_transition(k, phase.mode)
            elif isinstance(phase, DrivePhase):
                k = self._drive(k, phase)
            elif isinstance(phase, PausePhase):
                end_k = k + int(round(phase.duration_s / CONTROL_DT))
                idle = zero_command(self.manager.mode)
                while k < end_k:
                    k = self._tick(k, idle)
        # let everything coast to rest for a clean tail
        for _ in range(int(1.0 / CONTROL_DT)):
            k = self._tick(k, zero_command(self.manager.mode))

        metrics = self._metrics()
        verdict, flags, failures = compute_verdict(self.case, metrics)
        return TestReport(
            id=self.case.id,
            scenario=self.scenario.name,
            seed=self.seed,
            manoeuvre=self.case.manoeuvre,
            metrics=metrics,
            verdict=verdict,
            flags=flags,
            failures=failures,
            trace_ref=f"{self.case.id}_ticks.csv",
            ticks=self.frames,
        )

    def _metrics(self) -> dict:
        max_current = 0.0
        max_temp = 0.0
        for f in self.frames:
            max_current = max(max_current, *map(abs, f.drive_current_a),
                              *map(abs, f.steer_current_a))
            max_temp = max(max_temp, *f.drive_temp_c, *f.steer_temp_c)
        events = [
            {"t_s": e.t_s, "kind": e.kind, "detail": e.detail} for e in self.world.events
        ]
        fault = self.manager.fault_reason
        windows = [
            {
                "label": w.label,
                "t0_s": w.t0_s,
                "t1_s": w.t1_s,
                "commanded_speed_mps": w.commanded_speed_mps,
                "commanded_omega_radps": w.commanded_omega_radps,
                "progress_m": w.progress_m,
                "mean_speed_mps": w.mean_speed_mps,
                "drift_max_m": w.drift_max_m,
                "slip_mean": w.slip_mean,
                "slip_max": w.slip_max,
                "yaw_change_rad": w.yaw_change_rad,
                "yaw_efficiency": w.yaw_efficiency,
            }
            for w in self.windows
        ]
        drive_windows = [w for w in self.windows if w.commanded_speed_mps > 0]
        slip_means = [w.slip_mean for w in self.windows]
        drive_time = sum(w.t1_s - w.t0_s for w in drive_windows)
        drive_progress = sum(w.progress_m for w in drive_windows)
        return {
            "duration_s": self.world.time_s,
            "tilt_angle_deg": self.case.tilt_angle_deg,
            "mean_speed_mps": drive_progress / drive_time if drive_time > 0 else 0.0,
            "windows": windows,
            "slip_ratio_mean": (sum(slip_means) / len(slip_means)) if slip_means else 0.0,
            "slip_ratio_max": max((w.slip_max for w in self.windows), default=0.0),
            "cross_track_drift_m": max((w.drift_max_m for w in drive_windows), default=0.0),
            "yaw_efficiency": next(
                (w.yaw_efficiency for w in self.windows if w.yaw_efficiency is not None),
                None,
            ),
            "max_current_a": max_current,
            "max_temp_c": max_temp,
            "events": events,
            "fault_reason": fault,
            "terminal": self.world.terminal,
            "transitions_expected": self.transitions_expected,
            "transitions_done": self.transitions_done,
            "reconfig_speed_violations": self.reconfig_speed_violations,
            "runner_failures": list(self.failures),
            "completed": (
                self.world.terminal is None
                and fault is None
                and not self.failures
            ),
        }


def _ang_diff(a: float, b: float) -> float:
    d = a - b
    while d > math.pi:
        d -= 2 * math.pi
    while d <= -math.pi:
        d += 2 * math.pi
    return d


def compute_verdict(case: CampaignCase, metrics: dict) -> tuple[str, list[str], list[str]]:
    """Pure verdict recomputation from stored metrics."""
    crit = case.criteria
    failures: list[str] = list(metrics.get("runner_failures", []))
    flags: list[str] = []

    blocked = any(e["kind"] == "obstacle_blocked" for e in metrics["events"])
    expect_blocked = crit.get("expect_blocked", False)
    if blocked:
        flags.append("obstacle_blocked")
        if not expect_blocked:
            failures.append("unexpected obstacle block")
    elif expect_blocked:
        failures.append("expected an obstacle block that never happened")

    if metrics["terminal"] is not None:
        failures.append(f"terminal sim event: {metrics['terminal']}")
    if metrics["fault_reason"] is not None:
        failures.append(f"fault: {metrics['fault_reason']}")

    tol = crit.get("speed_tol_frac")
    min_prog = crit.get("min_progress_frac", 0.6 if not expect_blocked else None)
    for w in metrics["windows"]:
        v_cmd = w["commanded_speed_mps"]
        if v_cmd <= 0:
            continue
        dist_cmd = v_cmd * (w["t1_s"] - w["t0_s"])
        if tol is not None and abs(w["mean_speed_mps"] - v_cmd) > tol * v_cmd:
            failures.append(
                f"window {w['label']}: mean speed {w['mean_speed_mps']:.4f} "
                f"outside {tol:.0%} of {v_cmd}"
            )
        if crit.get("max_drift_frac") is not None and dist_cmd > 0:
            if w["drift_max_m"] > crit["max_drift_frac"] * dist_cmd:
                failures.append(
                    f"window {w['label']}: drift {w['drift_max_m']:.3f} m over "
                    f"{dist_cmd:.2f} m exceeds {crit['max_drift_frac']:.0%}"
                )
        if min_prog is not None and not expect_blocked:
            if w["progress_m"] < min_prog * dist_cmd:
                failures.append(
                    f"window {w['label']}: progress {w['progress_m']:.2f} m "
                    f"below {min_prog:.0%} of {dist_cmd:.2f} m"
                )

    if crit.get("max_mean_slip") is not None:
        worst = max((w["slip_mean"] for w in metrics["windows"]), default=0.0)
        if worst > crit["max_mean_slip"]:
            failures.append(f"mean slip {worst:.3f} exceeds {crit['max_mean_slip']}")

    eff = metrics.get("yaw_efficiency")
    if crit.get("yaw_eff_min") is not None:
        if eff is None or eff < crit["yaw_eff_min"]:
            failures.append(f"yaw efficiency {eff} below {crit['yaw_eff_min']}")
    if crit.get("yaw_eff_max") is not None:
        if eff is None or eff > crit["yaw_eff_max"]:
            failures.append(f"yaw efficiency {eff} above {crit['yaw_eff_max']}")
    if eff is not None and eff < 0.8:
        flags.append("significant_slip")
    if crit.get("expect_significant_slip"):
        if "significant_slip" not in flags:
            failures.append("expected significant point-turn slip did not occur")

    if crit.get("max_current_a") is not None:
        if metrics["max_current_a"] >= crit["max_current_a"]:
            failures.append(
                f"max current {metrics['max_current_a']:.2f} A not strictly below "
                f"{crit['max_current_a']} A"
            )
    if crit.get("max_temp_c") is not None:
        if metrics["max_temp_c"] >= crit["max_temp_c"]:
            failures.append(
                f"max temperature {metrics['max_temp_c']:.1f} C not strictly below "
                f"{crit['max_temp_c']} C"
            )

    if crit.get("require_all_transitions"):
        if metrics["transitions_done"] != metrics["transitions_expected"]:
            failures.append(
                f"only {metrics['transitions_done']}/{metrics['transitions_expected']} "
                "transitions completed"
            )
        if metrics["reconfig_speed_violations"]:
            failures.append(
                f"{metrics['reconfig_speed_violations']} wheel-speed violations "
                "during reconfiguration"
            )

    expected_flagging = expect_blocked or crit.get("expect_significant_slip", False)
    if failures:
        return "fail", flags, failures
    if expected_flagging and flags:
        return "pass_expected_flag", flags, []
    return "pass", flags, []


def run_case(case: CampaignCase, scenario: Scenario, seed: int) -> TestReport:
    """Run one case deterministically under the given stream seed."""
    return CaseRunner(case, scenario, seed).run()


def run_campaign(
    campaign: Campaign,
    seed: int | None = None,
    only_case: str | None = None,
) -> list[TestReport]:
    base_seed = campaign.seed if seed is None else seed
    reports = []
    for case in campaign.cases:
        if only_case is not None and case.id != only_case:
            continue
        scenario = load_scenario(resolve_ref(case.scenario_ref, campaign.source.parent))
        reports.append(run_case(case, scenario, case_seed(base_seed, case.id)))
    if only_case is not None and not reports:
        raise EmrsError(f"no case with id '{only_case}' in campaign")
    return reports


# -- report emission -----------------------------------------------------------

_TICK_COLUMNS = [
    "t_s", "phase", "mode", "fault_reason",
    "cmd_vx_mps", "cmd_vy_mps", "cmd_omega_radps",
    "act_vx_mps", "act_vy_mps", "act_omega_radps",
    "true_x_m", "true_y_m", "true_yaw_rad", "true_pitch_rad", "true_roll_rad",
    "tracked_x_m", "tracked_y_m", "tracked_yaw_rad",
]


def _tick_row(f: TelemetryFrame) -> list:
    row = [
        f.t_s, f.phase, f.mode, f.fault_reason or "",
        f.cmd_vx_mps, f.cmd_vy_mps, f.cmd_omega_radps,
        f.act_vx_mps, f.act_vy_mps, f.act_omega_radps,
        f.true_x_m, f.true_y_m, f.true_yaw_rad, f.true_pitch_rad, f.true_roll_rad,
        f.tracked_x_m, f.tracked_y_m, f.tracked_yaw_rad,
    ]
    for i in range(4):
        row.extend([
            f.steer_angle_sp_rad[i], f.steer_angle_rad[i],
            f.wheel_speed_sp_radps[i], f.wheel_speed_radps[i],
            f.drive_current_a[i], f.drive_temp_c[i], f.slip_ratio[i],
        ])
    return [repr(v) if isinstance(v, float) else v for v in row]


def _tick_header() -> list[str]:
    cols = list(_TICK_COLUMNS)
    for i in range(4):
        cols.extend([
            f"steer_sp_rad_{i}", f"steer_rad_{i}",
            f"speed_sp_radps_{i}", f"speed_radps_{i}",
            f"current_a_{i}", f"temp_c_{i}", f"slip_{i}",
        ])
    return cols


def emit_reports(
    reports: list[TestReport],
    out_dir: str | Path,
    campaign_name: str = "",
    seed: int = 0,
    figures: bool = True,
) -> list[Path]:
    """Write one JSON report and one per-tick CSV per case, a campaign
    summary, and (optionally) rendered figures.  Idempotent overwrite,
    stable field order, no wall-clock content."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    for rep in reports:
        jpath = out / f"{rep.id}.json"
        jpath.write_text(json.dumps(rep.to_json_dict(), indent=2, sort_keys=True) + "\n")
        written.append(jpath)

        cpath = out / f"{rep.id}_ticks.csv"
        with cpath.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(_tick_header())
            for f in rep.ticks:
                writer.writerow(_tick_row(f))
        written.append(cpath)

    summary = {
        "campaign": campaign_name,
        "seed": seed,
        "n_cases": len(reports),
        "verdicts": {r.id: r.verdict for r in reports},
        "all_pass_or_expected": all(
            r.verdict in ("pass", "pass_expected_flag") for r in reports
        ),
        "requirements": {
            "min_traverse_speed_mps": REQUIREMENTS.min_traverse_speed_mps,
            "max_static_pitch_roll_deg": REQUIREMENTS.max_static_pitch_roll_deg,
            "isru_demo": {
                "payload_kg_per_cycle": REQUIREMENTS.isru_payload_kg,
                "cycles": REQUIREMENTS.isru_cycles,
                "total_delivered_kg": REQUIREMENTS.isru_payload_kg * REQUIREMENTS.isru_cycles,
            },
        },
    }
    spath = out / "summary.json"
    spath.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    written.append(spath)

    if figures:
        from . import figures as figmod

        written.extend(figmod.render_case_figures(reports, out))
        written.extend(figmod.render_campaign_figures(reports, out))
    return written
