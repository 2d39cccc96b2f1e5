"""2.5D terrain: bilinear heightfield, tilting bed section, soil and
obstacles.

The tilting bed mimics an indoor soil box whose rear section hinges up to a
commanded slope: every point beyond the hinge x gains tan(angle) * (x -
hinge_x) of elevation, which yields a surface whose slope equals the bed
angle exactly.  Obstacles are raised footprint polygons; traversable ones
contribute a smoothed bump so the rover's attitude reacts, blocked ones act
through the traversal rule in the simulator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import OutOfBounds

MAX_TILT_RAD = math.radians(30.0)


@dataclass(frozen=True)
class SoilParams:
    """Shear-strength and interaction parameters of the bed material."""

    cohesion_kpa: float = 10.0
    friction_angle_deg: float = 28.0
    density_kg_m3: float = 1300.0
    granulometry_mm: tuple[float, float] = (0.01, 5.0)
    slip_knee: float = 0.5
    contact_patch_m2: float = 0.02
    rolling_resistance: float = 0.05

    def __post_init__(self):
        if self.cohesion_kpa < 0:
            raise ValueError("cohesion_kpa must be non-negative")
        if not 0.0 < self.friction_angle_deg < 45.0:
            raise ValueError("friction_angle_deg must lie in (0, 45)")
        if not 0.0 < self.slip_knee < 1.0:
            raise ValueError("slip_knee must lie in (0, 1)")
        if self.contact_patch_m2 <= 0:
            raise ValueError("contact_patch_m2 must be positive")

    @property
    def cohesion_force_n(self) -> float:
        """Cohesive thrust contribution of one wheel patch."""
        return self.cohesion_kpa * 1000.0 * self.contact_patch_m2

    @property
    def tan_friction(self) -> float:
        return math.tan(math.radians(self.friction_angle_deg))


@dataclass
class TiltBed:
    """Hinged bed section: terrain beyond hinge_x_m rises at angle_rad."""

    hinge_x_m: float
    angle_rad: float = 0.0

    def __post_init__(self):
        self.set_angle(self.angle_rad)

    def set_angle(self, angle_rad: float):
        if not 0.0 <= angle_rad <= MAX_TILT_RAD + 1e-12:
            raise ValueError("tilt angle must lie in [0, 30 deg]")
        self.angle_rad = angle_rad


@dataclass(frozen=True)
class Obstacle:
    """Raised footprint polygon of uniform height."""

    polygon: tuple[tuple[float, float], ...]
    height_m: float
    edge_band_m: float = 0.08

    def contains(self, x: float, y: float) -> bool:
        inside = False
        pts = self.polygon
        j = len(pts) - 1
        for i in range(len(pts)):
            xi, yi = pts[i]
            xj, yj = pts[j]
            if (yi > y) != (yj > y) and x < (xj - xi) * (y - yi) / (yj - yi) + xi:
                inside = not inside
            j = i
        return inside

    def distance_outside(self, x: float, y: float) -> float:
        """Distance to the polygon boundary; 0 inside."""
        if self.contains(x, y):
            return 0.0
        best = math.inf
        pts = self.polygon
        j = len(pts) - 1
        for i in range(len(pts)):
            best = min(best, _segment_distance(x, y, pts[j], pts[i]))
            j = i
        return best

    def bump_height(self, x: float, y: float) -> float:
        """Smoothed height contribution (cosine shoulder over the band)."""
        d = self.distance_outside(x, y)
        if d >= self.edge_band_m:
            return 0.0
        if d == 0.0:
            return self.height_m
        return self.height_m * 0.5 * (1.0 + math.cos(math.pi * d / self.edge_band_m))


def _segment_distance(x, y, a, b) -> float:
    ax, ay = a
    bx, by = b
    dx, dy = bx - ax, by - ay
    L2 = dx * dx + dy * dy
    if L2 == 0.0:
        return math.hypot(x - ax, y - ay)
    t = ((x - ax) * dx + (y - ay) * dy) / L2
    t = min(1.0, max(0.0, t))
    return math.hypot(x - ax - t * dx, y - ay - t * dy)


@dataclass
class TerrainModel:
    """Uniform-grid heightfield with optional tilt bed and obstacles.

    The grid spans x in [0, (nx-1)*cell], y in [0, (ny-1)*cell]; heights
    are bilinearly interpolated so the surface is continuous.
    """

    heights: list[list[float]]
    cell_m: float
    soil: SoilParams = field(default_factory=SoilParams)
    tilt: TiltBed | None = None
    obstacles: list[Obstacle] = field(default_factory=list)

    def __post_init__(self):
        self.ny = len(self.heights)
        self.nx = len(self.heights[0])
        if self.cell_m <= 0:
            raise ValueError("cell_m must be positive")
        for row in self.heights:
            if len(row) != self.nx:
                raise ValueError("heightmap rows must have equal length")
            for h in row:
                if not math.isfinite(h):
                    raise ValueError("heights must be finite")

    @classmethod
    def flat(cls, size_x_m: float, size_y_m: float, cell_m: float = 0.5, **kw) -> "TerrainModel":
        nx = max(2, int(round(size_x_m / cell_m)) + 1)
        ny = max(2, int(round(size_y_m / cell_m)) + 1)
        return cls([[0.0] * nx for _ in range(ny)], cell_m, **kw)

    @property
    def size_x_m(self) -> float:
        return (self.nx - 1) * self.cell_m

    @property
    def size_y_m(self) -> float:
        return (self.ny - 1) * self.cell_m

    def in_bounds(self, x: float, y: float) -> bool:
        return 0.0 <= x <= self.size_x_m and 0.0 <= y <= self.size_y_m

    def _base_height(self, x: float, y: float) -> float:
        gx = x / self.cell_m
        gy = y / self.cell_m
        i = min(int(gx), self.nx - 2)
        j = min(int(gy), self.ny - 2)
        fx = gx - i
        fy = gy - j
        h = self.heights
        return (
            h[j][i] * (1 - fx) * (1 - fy)
            + h[j][i + 1] * fx * (1 - fy)
            + h[j + 1][i] * (1 - fx) * fy
            + h[j + 1][i + 1] * fx * fy
        )

    def height_at(self, x: float, y: float) -> float:
        if not self.in_bounds(x, y):
            raise OutOfBounds(f"({x:.3f}, {y:.3f}) is outside the terrain")
        z = self._base_height(x, y)
        if self.tilt is not None and x > self.tilt.hinge_x_m:
            z += math.tan(self.tilt.angle_rad) * (x - self.tilt.hinge_x_m)
        for ob in self.obstacles:
            z += ob.bump_height(x, y)
        return z

    def normal_at(self, x: float, y: float, eps: float = 0.02) -> tuple[float, float, float]:
        """Unit surface normal from central height differences."""
        xl = max(0.0, x - eps)
        xr = min(self.size_x_m, x + eps)
        yl = max(0.0, y - eps)
        yr = min(self.size_y_m, y + eps)
        dzdx = (self.height_at(xr, y) - self.height_at(xl, y)) / (xr - xl)
        dzdy = (self.height_at(x, yr) - self.height_at(x, yl)) / (yr - yl)
        n = math.sqrt(1.0 + dzdx * dzdx + dzdy * dzdy)
        return (-dzdx / n, -dzdy / n, 1.0 / n)

    def query(self, x: float, y: float) -> tuple[float, tuple[float, float, float], SoilParams]:
        """Height, unit normal and soil at a point; raises OutOfBounds."""
        return self.height_at(x, y), self.normal_at(x, y), self.soil
