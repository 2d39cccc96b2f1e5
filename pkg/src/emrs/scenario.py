"""Scenario and campaign file loading.

Files are YAML with explicit units in the field names.  Parsing is strict:
unknown fields are rejected, types and ranges are checked, and every error
names the offending field path.  Scenarios bundle everything one world
needs (geometry, actuator plants, loop gains, soil, terrain, start pose);
campaigns reference scenarios by packaged name or by path relative to the
campaign file.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import yaml

from .control import MotorState
from .errors import ParseError, SchemaViolation
from .manager import ManagerConfig, SafetyLimits, SteeringProfile
from .sim import World
from .terrain import MAX_TILT_RAD, Obstacle, SoilParams, TerrainModel, TiltBed
from .types import Pose2p5, RoverGeometry


def _load_yaml(path: Path) -> dict:
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(str(exc), path=str(path))
    try:
        doc = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        line = exc.problem_mark.line + 1 if exc.problem_mark else None
        raise ParseError(exc.problem or "invalid YAML", path=str(path), line=line)
    except yaml.YAMLError as exc:
        raise ParseError(str(exc), path=str(path))
    if doc is None:
        raise ParseError("file is empty", path=str(path))
    if not isinstance(doc, dict):
        raise ParseError("top level must be a mapping", path=str(path))
    return doc


class _Section:
    """Strict view over one mapping level: every get is tracked, leftovers
    are schema violations."""

    def __init__(self, data: dict, path: str):
        if not isinstance(data, dict):
            raise SchemaViolation("expected a mapping", path)
        self.data = data
        self.path = path
        self._seen: set[str] = set()

    def child(self, key: str, required: bool = True) -> "_Section | None":
        if key not in self.data:
            if required:
                raise SchemaViolation("required section missing", f"{self.path}.{key}")
            return None
        self._seen.add(key)
        return _Section(self.data[key], f"{self.path}.{key}")

    def get(self, key: str, kind, default=None, required: bool = False,
            low=None, high=None):
        if key not in self.data:
            if required:
                raise SchemaViolation("required field missing", f"{self.path}.{key}")
            return default
        self._seen.add(key)
        value = self.data[key]
        fpath = f"{self.path}.{key}"
        if kind is float:
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise SchemaViolation("expected a number", fpath)
            value = float(value)
        elif kind is int:
            if not isinstance(value, int) or isinstance(value, bool):
                raise SchemaViolation("expected an integer", fpath)
        elif kind is str:
            if not isinstance(value, str):
                raise SchemaViolation("expected a string", fpath)
        elif kind is bool:
            if not isinstance(value, bool):
                raise SchemaViolation("expected a boolean", fpath)
        elif kind is list:
            if not isinstance(value, list):
                raise SchemaViolation("expected a list", fpath)
        if low is not None and value < low:
            raise SchemaViolation(f"must be >= {low}", fpath)
        if high is not None and value > high:
            raise SchemaViolation(f"must be <= {high}", fpath)
        return value

    def get_vec3(self, key: str, default):
        if key not in self.data:
            return default
        self._seen.add(key)
        v = self.data[key]
        if not isinstance(v, list) or len(v) != 3 or not all(
            isinstance(x, (int, float)) and not isinstance(x, bool) for x in v
        ):
            raise SchemaViolation("expected [x, y, z] numbers", f"{self.path}.{key}")
        return (float(v[0]), float(v[1]), float(v[2]))

    def finish(self):
        unknown = set(self.data) - self._seen
        if unknown:
            raise SchemaViolation(
                f"unknown field(s): {', '.join(sorted(unknown))}", self.path
            )


def _motor_from(sec: _Section | None, base: MotorState) -> MotorState:
    if sec is None:
        return base
    kw = {}
    for name in (
        "inertia_kgm2",
        "damping_nms",
        "torque_constant_nm_per_a",
        "winding_res_ohm",
        "torque_limit_nm",
        "thermal_capacity_j_per_c",
        "dissipation_w_per_c",
        "ambient_c",
    ):
        val = sec.get(name, float)
        if val is not None:
            kw[name] = val
    sec.finish()
    from dataclasses import replace

    return replace(base, **kw)


@dataclass
class Scenario:
    """Everything needed to instantiate one world and its manager."""

    name: str
    description: str
    seed: int
    geometry: RoverGeometry
    manager_config: ManagerConfig
    safety: SafetyLimits
    soil: SoilParams
    terrain_size: tuple[float, float]
    terrain_cell_m: float
    tilt_hinge_x_m: float | None
    tilt_angle_rad: float
    start_pose: Pose2p5
    payload_kg: float
    payload_cog: tuple[float, float, float]
    blade_drag_n: float
    wheel_motor: MotorState
    steer_motor: MotorState
    velocity_gains: dict
    position_gains: dict
    steering_rate_gain: float
    steering_rate_limit_radps: float
    source: str = ""

    def build_terrain(
        self,
        tilt_angle_rad: float | None = None,
        obstacles: list[Obstacle] | None = None,
    ) -> TerrainModel:
        tilt = None
        angle = self.tilt_angle_rad if tilt_angle_rad is None else tilt_angle_rad
        if self.tilt_hinge_x_m is not None:
            tilt = TiltBed(hinge_x_m=self.tilt_hinge_x_m, angle_rad=angle)
        elif angle:
            raise SchemaViolation("tilt angle given but scenario has no tilt bed", "tilt")
        return TerrainModel.flat(
            self.terrain_size[0],
            self.terrain_size[1],
            cell_m=self.terrain_cell_m,
            soil=self.soil,
            tilt=tilt,
            obstacles=list(obstacles or []),
        )

    def build_world(
        self,
        seed: int | None = None,
        tilt_angle_rad: float | None = None,
        obstacles: list[Obstacle] | None = None,
        payload_kg: float | None = None,
        blade_drag_n: float | None = None,
        start_pose: Pose2p5 | None = None,
    ) -> World:
        return World(
            geometry=self.geometry,
            terrain=self.build_terrain(tilt_angle_rad, obstacles),
            start_pose=start_pose or self.start_pose,
            seed=self.seed if seed is None else seed,
            payload_kg=self.payload_kg if payload_kg is None else payload_kg,
            payload_cog=self.payload_cog,
            blade_drag_n=self.blade_drag_n if blade_drag_n is None else blade_drag_n,
            wheel_motor=self.wheel_motor,
            steer_motor=self.steer_motor,
            velocity_gains=self.velocity_gains,
            position_gains=self.position_gains,
            steering_rate_gain=self.steering_rate_gain,
            steering_rate_limit_radps=self.steering_rate_limit_radps,
        )


def packaged_path(name: str) -> Path:
    """Path of a scenario or campaign shipped inside the package."""
    return Path(str(resources.files("emrs") / "data" / f"{name}.yaml"))


def resolve_ref(ref: str, relative_to: Path | None = None) -> Path:
    """Resolve a scenario reference: explicit path first, then packaged."""
    p = Path(ref)
    if p.suffix in (".yaml", ".yml"):
        if not p.is_absolute() and relative_to is not None:
            p = relative_to / p
        return p
    packaged = packaged_path(ref)
    if packaged.exists():
        return packaged
    if not p.is_absolute() and relative_to is not None:
        return relative_to / ref
    return p


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    doc = _load_yaml(path)
    root = _Section(doc, "scenario")
    try:
        kind = root.get("kind", str, required=True)
        if kind != "scenario":
            raise SchemaViolation("kind must be 'scenario'", "scenario.kind")
        name = root.get("name", str, required=True)
        description = root.get("description", str, default="")

        rng = root.child("rng", required=False)
        seed = 0
        if rng is not None:
            rng_kind = rng.get("kind", str, default="pcg64")
            if rng_kind != "pcg64":
                raise SchemaViolation("only the pcg64 generator is supported", f"{rng.path}.kind")
            seed = rng.get("seed", int, default=0, low=0)
            rng.finish()

        geo = root.child("geometry")
        geometry = RoverGeometry(
            wheelbase_m=geo.get("wheelbase_m", float, required=True, low=1e-6),
            track_m=geo.get("track_m", float, required=True, low=1e-6),
            wheel_radius_m=geo.get("wheel_radius_m", float, required=True, low=1e-6),
            steering_offset_m=geo.get("steering_offset_m", float, default=0.0),
            steering_limit_rad=math.radians(
                geo.get("steering_limit_deg", float, default=90.0, low=1.0, high=180.0)
            ),
            chassis_mass_kg=geo.get("chassis_mass_kg", float, required=True, low=1e-6),
            cog_body=geo.get_vec3("cog_body_m", (0.0, 0.0, 0.35)),
            skid_correction=geo.get("skid_correction", float, default=1.0, low=1e-6),
        )
        geo.finish()

        lim = root.child("limits", required=False)
        v_max, omega_max = 0.2, 0.3
        if lim is not None:
            v_max = lim.get("v_max_mps", float, default=0.2, low=1e-6)
            omega_max = lim.get("omega_max_radps", float, default=0.3, low=1e-6)
            lim.finish()

        prof_sec = root.child("steering_profile", required=False)
        profile = SteeringProfile()
        if prof_sec is not None:
            profile = SteeringProfile(
                max_rate_radps=math.radians(
                    prof_sec.get("max_rate_deg_s", float, default=30.0, low=1e-3)
                ),
                max_accel_radps2=math.radians(
                    prof_sec.get("max_accel_deg_s2", float, default=60.0, low=1e-3)
                ),
            )
            prof_sec.finish()
        manager_config = ManagerConfig(
            v_max_mps=v_max, omega_max_radps=omega_max, steering=profile
        )

        saf = root.child("safety", required=False)
        safety = SafetyLimits()
        if saf is not None:
            safety = SafetyLimits(
                max_motor_current_a=saf.get("max_motor_current_a", float, default=14.0, low=1e-9),
                max_motor_temp_c=saf.get("max_motor_temp_c", float, default=80.0, low=1e-9),
                max_tracking_err_radps=saf.get(
                    "max_tracking_err_radps", float, default=1.0, low=1e-9
                ),
                max_steering_err_rad=saf.get(
                    "max_steering_err_rad", float, default=0.12, low=1e-9
                ),
                command_timeout_s=saf.get("command_timeout_s", float, default=0.5, low=1e-9),
            )
            saf.finish()

        soil_sec = root.child("soil", required=False)
        soil = SoilParams()
        if soil_sec is not None:
            gran = soil_sec.get("granulometry_mm", list, default=[0.01, 5.0])
            if len(gran) != 2:
                raise SchemaViolation("expected [min, max]", f"{soil_sec.path}.granulometry_mm")
            try:
                soil = SoilParams(
                    cohesion_kpa=soil_sec.get("cohesion_kpa", float, default=10.0),
                    friction_angle_deg=soil_sec.get("friction_angle_deg", float, default=28.0),
                    density_kg_m3=soil_sec.get("density_kg_m3", float, default=1300.0, low=1.0),
                    granulometry_mm=(float(gran[0]), float(gran[1])),
                    slip_knee=soil_sec.get("slip_knee", float, default=0.5),
                    contact_patch_m2=soil_sec.get("contact_patch_m2", float, default=0.02),
                    rolling_resistance=soil_sec.get(
                        "rolling_resistance", float, default=0.05, low=0.0
                    ),
                )
            except ValueError as exc:
                raise SchemaViolation(str(exc), soil_sec.path)
            soil_sec.finish()

        terr = root.child("terrain")
        size_x = terr.get("size_x_m", float, required=True, low=1.0)
        size_y = terr.get("size_y_m", float, required=True, low=1.0)
        cell = terr.get("cell_m", float, default=0.5, low=0.01)
        tilt_sec = terr.child("tilt_bed", required=False)
        hinge_x = None
        tilt_angle = 0.0
        if tilt_sec is not None:
            hinge_x = tilt_sec.get("hinge_x_m", float, required=True, low=0.0)
            tilt_angle = math.radians(
                tilt_sec.get("angle_deg", float, default=0.0, low=0.0,
                             high=math.degrees(MAX_TILT_RAD))
            )
            tilt_sec.finish()
        terr.finish()

        pose_sec = root.child("start_pose", required=False)
        start_pose = Pose2p5(size_x / 2, size_y / 2, 0.0)
        if pose_sec is not None:
            start_pose = Pose2p5(
                pose_sec.get("x_m", float, required=True),
                pose_sec.get("y_m", float, required=True),
                math.radians(pose_sec.get("yaw_deg", float, default=0.0)),
            )
            pose_sec.finish()

        pay = root.child("payload", required=False)
        payload_kg = 0.0
        payload_cog = (0.0, 0.0, 0.55)
        if pay is not None:
            payload_kg = pay.get("mass_kg", float, default=0.0, low=0.0, high=300.0)
            payload_cog = pay.get_vec3("cog_m", payload_cog)
            pay.finish()

        blade_drag = root.get("blade_drag_n", float, default=0.0, low=0.0)

        ctl = root.child("control", required=False)
        velocity_gains: dict = {}
        position_gains: dict = {}
        steering_rate_gain = 40.0
        steering_rate_limit = math.radians(45.0)
        if ctl is not None:
            for src, dst in (
                ("velocity_kp", "kp"),
                ("velocity_ki", "ki"),
                ("velocity_integrator_limit", "integrator_limit"),
            ):
                val = ctl.get(src, float, low=0.0)
                if val is not None:
                    velocity_gains[dst] = val
            for src, dst in (("position_kp", "kp"), ("position_kd", "kd")):
                val = ctl.get(src, float, low=0.0)
                if val is not None:
                    position_gains[dst] = val
            steering_rate_gain = ctl.get("steering_rate_gain", float, default=40.0, low=1e-9)
            steering_rate_limit = math.radians(
                ctl.get("steering_rate_limit_deg_s", float, default=45.0, low=1e-3)
            )
            ctl.finish()

        plant = root.child("plant", required=False)
        wheel_motor = MotorState()
        steer_motor = None
        if plant is not None:
            wheel_motor = _motor_from(plant.child("wheel", required=False), wheel_motor)
            from .control import DEFAULT_STEERING_MOTOR

            steer_motor = _motor_from(plant.child("steering", required=False),
                                      DEFAULT_STEERING_MOTOR)
            plant.finish()

        root.finish()
    except ValueError as exc:
        raise SchemaViolation(str(exc), "scenario")

    return Scenario(
        name=name,
        description=description,
        seed=seed,
        geometry=geometry,
        manager_config=manager_config,
        safety=safety,
        soil=soil,
        terrain_size=(size_x, size_y),
        terrain_cell_m=cell,
        tilt_hinge_x_m=hinge_x,
        tilt_angle_rad=tilt_angle,
        start_pose=start_pose,
        payload_kg=payload_kg,
        payload_cog=payload_cog,
        blade_drag_n=blade_drag,
        wheel_motor=wheel_motor,
        steer_motor=steer_motor,
        velocity_gains=velocity_gains,
        position_gains=position_gains,
        steering_rate_gain=steering_rate_gain,
        steering_rate_limit_radps=steering_rate_limit,
        source=str(path),
    )
