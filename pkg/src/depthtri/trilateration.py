"""Range-based localisation from n sensors, plus the three-sensor rig.

The sphere equations ``|p - k_i|^2 = r_i^2`` are linearised by subtracting
the anchor sensor (the first listed one):

    (p - k_1) . (k_i - k_1) = 1/2 (r_1^2 - r_i^2 + |k_i - k_1|^2),   i = 2..n

and the resulting ``A x = b`` is solved in the least-squares sense for the
offset ``x = p - k_1``.

The three-sensor rig places k1 at the origin, k2 on the +x axis and k3 on
the far side of the target. k1 and k2 look along +y, k3 looks along -y.
Each sensor reports an angle and a depth:

* k1, k2: ``theta`` is measured from the optical axis, so the bearing from
  the baseline is ``pi/2 - theta`` and the range is ``D / sin(bearing)``;
* k3: ``theta`` is the bearing off its own optical axis and the range is
  ``D / cos(theta)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DegenerateGeometry, DegenerateTriangle, DivisionByZero, NoFiniteSolution

COND_THRESHOLD = 1e8
TRIG_EPS = 1e-12
ROLES = ("k1", "k2", "k3")


@dataclass(frozen=True)
class SensorPose:
    id: str
    position: tuple

    def __post_init__(self):
        pos = tuple(float(c) for c in self.position)
        if len(pos) == 2:
            pos = pos + (0.0,)
        if len(pos) != 3:
            raise ValueError(f"sensor {self.id}: position needs 2 or 3 coordinates")
        if not all(math.isfinite(c) for c in pos):
            raise NoFiniteSolution(f"sensor {self.id}: non-finite position {pos}")
        object.__setattr__(self, "position", pos)

    @property
    def xy(self) -> tuple:
        return self.position[:2]


@dataclass(frozen=True)
class TrilaterationProblem:
    sensors: tuple
    radii: tuple

    def __post_init__(self):
        sensors = tuple(
            s if isinstance(s, SensorPose) else SensorPose(f"k{i + 1}", s)
            for i, s in enumerate(self.sensors)
        )
        radii = tuple(float(r) for r in self.radii)
        if len(sensors) < 3:
            raise DegenerateGeometry(f"need at least 3 sensors, got {len(sensors)}")
        if len(radii) != len(sensors):
            raise ValueError(f"{len(sensors)} sensors but {len(radii)} radii")
        if not all(math.isfinite(r) for r in radii):
            raise NoFiniteSolution("non-finite radius")
        if not all(r > 0 for r in radii):
            raise ValueError("radii must be positive")
        object.__setattr__(self, "sensors", sensors)
        object.__setattr__(self, "radii", radii)

    @classmethod
    def from_target(cls, positions, target) -> "TrilaterationProblem":
        """Exact-range problem for a known target (test and simulation helper)."""
        pts = np.asarray(positions, dtype=float)
        t = np.asarray(target, dtype=float)
        return cls(tuple(map(tuple, pts)), tuple(np.linalg.norm(pts - t, axis=1)))

    @property
    def positions(self) -> np.ndarray:
        return np.array([s.position for s in self.sensors])

    def to_json(self) -> dict:
        return {
            "sensors": [{"id": s.id, "pos": list(s.position)} for s in self.sensors],
            "radii": list(self.radii),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "TrilaterationProblem":
        try:
            sensors = tuple(SensorPose(str(s["id"]), tuple(s["pos"])) for s in obj["sensors"])
            radii = tuple(obj["radii"])
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed trilateration problem: {exc}") from exc
        return cls(sensors, radii)


class SolveMethod(enum.Enum):
    NORMAL_EQUATIONS = "normal_equations"
    SVD = "svd"


@dataclass(frozen=True)
class Solution:
    position: tuple
    residuals: tuple  # e_i^2 = |p - k_i|^2 - r_i^2, mm^2
    condition_estimate: float
    method: SolveMethod

    def to_json(self) -> dict:
        return {
            "position": list(self.position),
            "residuals_mm2": list(self.residuals),
            "condition_estimate": self.condition_estimate,
            "method": self.method.value,
        }


def _dims(planar: bool) -> int:
    return 2 if planar else 3


def build_linear_system(problem: TrilaterationProblem, planar: bool = False):
    """Return ``(A, b)`` with A of shape ``(n-1, 3)`` anchored at the first sensor.

    Raises :class:`DegenerateGeometry` when A cannot pin down the unknowns:
    rank 2 is needed in planar mode (x, y columns), rank 3 otherwise.
    """
    k = problem.positions
    r = np.asarray(problem.radii)
    A = k[1:] - k[0]
    baseline_sq = (A ** 2).sum(axis=1)
    b = 0.5 * (r[0] ** 2 - r[1:] ** 2 + baseline_sq)
    need = _dims(planar)
    if np.linalg.matrix_rank(A[:, :need]) < need:
        raise DegenerateGeometry(
            f"sensor layout has rank {np.linalg.matrix_rank(A[:, :need])}, {need} required"
        )
    return A, b


def sphere_residuals(positions: np.ndarray, radii, point) -> np.ndarray:
    p = np.asarray(point, dtype=float)
    return ((positions - p) ** 2).sum(axis=1) - np.asarray(radii, dtype=float) ** 2


def solve(problem: TrilaterationProblem, planar: bool = False,
          cond_threshold: float = COND_THRESHOLD) -> Solution:
    """Least-squares target position.

    Normal equations are used while ``cond(A^T A)`` stays under
    ``cond_threshold``; past it the SVD-based ``lstsq`` takes over.
    In planar mode the z column is dropped and ``z = z_k1``.
    """
    A, b = build_linear_system(problem, planar)
    need = _dims(planar)
    M = A[:, :need]
    normal = M.T @ M
    cond = float(np.linalg.cond(normal))
    if math.isfinite(cond) and cond <= cond_threshold:
        x = np.linalg.solve(normal, M.T @ b)
        method = SolveMethod.NORMAL_EQUATIONS
    else:
        x = np.linalg.lstsq(M, b, rcond=None)[0]
        method = SolveMethod.SVD
    anchor = problem.positions[0]
    pos = anchor.copy()
    pos[:need] += x
    if not np.all(np.isfinite(pos)):
        raise NoFiniteSolution(f"solver produced {pos}")
    res = sphere_residuals(problem.positions, problem.radii, pos)
    return Solution(
        position=tuple(float(c) for c in pos),
        residuals=tuple(float(e) for e in res),
        condition_estimate=max(cond, 1.0) if math.isfinite(cond) else float("inf"),
        method=method,
    )


def linear_objective(problem: TrilaterationProblem, point, planar: bool = False) -> float:
    """``|A (p - k_1) - b|^2``, the quantity :func:`solve` minimises."""
    A, b = build_linear_system(problem, planar)
    need = _dims(planar)
    x = (np.asarray(point, dtype=float) - problem.positions[0])[:need]
    return float(((A[:, :need] @ x - b) ** 2).sum())


# -- three-sensor rig --------------------------------------------------------

def layout_triangle(l12: float, l13: float, l23: float) -> tuple:
    """Place k1, k2, k3 in the plane from the three baseline lengths.

    k1 sits at the origin, k2 at ``(l12, 0)`` and k3 above the baseline
    with its height from Heron's formula.
    """
    sides = (float(l12), float(l13), float(l23))
    if not all(math.isfinite(s) and s > 0 for s in sides):
        raise DegenerateTriangle(f"baselines must be positive and finite: {sides}")
    a, b, c = sorted(sides)
    if not a + b > c:
        raise DegenerateTriangle(f"baselines {sides} violate the triangle inequality")
    s = 0.5 * (l12 + l13 + l23)
    area_sq = s * (s - l12) * (s - l13) * (s - l23)
    if area_sq <= (1e-12 * c * c) ** 2:
        raise DegenerateTriangle(f"baselines {sides} span a degenerate triangle")
    y3 = 2.0 * math.sqrt(area_sq) / l12
    x3_sq = l13 * l13 - y3 * y3
    # sqrt drops the sign of x3 when the angle at k1 is obtuse; l23 decides it
    x3 = math.sqrt(max(x3_sq, 0.0))
    if abs(math.hypot(x3 - l12, y3) - l23) > abs(math.hypot(-x3 - l12, y3) - l23):
        x3 = -x3
    return (
        SensorPose("k1", (0.0, 0.0)),
        SensorPose("k2", (float(l12), 0.0)),
        SensorPose("k3", (x3, y3)),
    )


def _check_role(role: str) -> str:
    if role not in ROLES:
        raise ValueError(f"role must be one of {ROLES}, got {role!r}")
    return role


def observation_to_radius(role: str, theta: float, depth_mm: float) -> tuple:
    """Convert a sensor's (angle, depth) pair into ``(bearing, range)``."""
    _check_role(role)
    if not depth_mm > 0:
        raise ValueError("depth must be positive")
    if role == "k3":
        bearing = float(theta)
        denom = math.cos(bearing)
    else:
        bearing = math.pi / 2 - float(theta)
        denom = math.sin(bearing)
    if abs(denom) < TRIG_EPS:
        raise DivisionByZero(f"{role}: degenerate angle {theta}")
    return bearing, depth_mm / denom


def single_sensor_position(role: str, pose: SensorPose, bearing: float, depth_mm: float) -> tuple:
    """Target position implied by one sensor's bearing and depth alone."""
    _check_role(role)
    x0, y0 = pose.xy
    if role == "k3":
        c = math.cos(bearing)
        if abs(c) < TRIG_EPS:
            raise DivisionByZero(f"k3: degenerate bearing {bearing}")
        return (x0 - depth_mm * math.sin(bearing) / c, y0 - depth_mm)
    s = math.sin(bearing)
    if abs(s) < TRIG_EPS:
        raise DivisionByZero(f"{role}: degenerate bearing {bearing}")
    run = depth_mm * math.cos(bearing) / s
    if role == "k1":
        return (x0 + run, y0 + depth_mm)
    return (x0 - run, y0 + depth_mm)


def observe(role: str, pose: SensorPose, target) -> tuple:
    """Exact (theta, depth) a sensor in ``role`` would report for ``target``.

    Inverse of :func:`observation_to_radius` plus :func:`single_sensor_position`.
    """
    _check_role(role)
    x0, y0 = pose.xy
    tx, ty = float(target[0]), float(target[1])
    if role == "k3":
        depth = y0 - ty
        return math.atan2(x0 - tx, depth), depth
    depth = ty - y0
    run = tx - x0 if role == "k1" else x0 - tx
    return math.pi / 2 - math.atan2(depth, run), depth


@dataclass(frozen=True)
class Observation:
    role: str
    theta_rad: float
    depth_mm: float


@dataclass(frozen=True)
class CaseStudyInput:
    l12: float
    l13: float
    l23: float
    observations: tuple

    def __post_init__(self):
        obs = tuple(o if isinstance(o, Observation) else Observation(*o) for o in self.observations)
        if sorted(o.role for o in obs) != list(ROLES):
            raise ValueError("need exactly one observation per role k1, k2, k3")
        for o in obs:
            if not (math.isfinite(o.theta_rad) and math.isfinite(o.depth_mm)):
                raise ValueError(f"{o.role}: non-finite observation")
            if not o.depth_mm > 0:
                raise ValueError(f"{o.role}: depth must be positive")
            if o.role == "k3":
                ok = abs(o.theta_rad) < math.pi / 2
            else:
                ok = 0.0 <= o.theta_rad <= math.pi / 2
            if not ok:
                raise ValueError(f"{o.role}: angle {o.theta_rad} outside the sensor's range")
        object.__setattr__(self, "observations", tuple(sorted(obs, key=lambda o: o.role)))

    def observation(self, role: str) -> Observation:
        return next(o for o in self.observations if o.role == role)

    @classmethod
    def from_json(cls, obj: dict) -> "CaseStudyInput":
        try:
            base = obj["baselines"]
            obs = tuple(
                Observation(str(o["role"]), float(o["theta_rad"]), float(o["depth_mm"]))
                for o in obj["obs"]
            )
            return cls(float(base["l12"]), float(base["l13"]), float(base["l23"]), obs)
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed case-study input: {exc}") from exc

    def to_json(self) -> dict:
        return {
            "baselines": {"l12": self.l12, "l13": self.l13, "l23": self.l23},
            "obs": [
                {"role": o.role, "theta_rad": o.theta_rad, "depth_mm": o.depth_mm}
                for o in self.observations
            ],
        }

    @classmethod
    def synthesize(cls, l12: float, l13: float, l23: float, target) -> "CaseStudyInput":
        """Noise-free observations of ``target`` from the rig ``(l12, l13, l23)``."""
        poses = layout_triangle(l12, l13, l23)
        obs = tuple(Observation(p.id, *observe(p.id, p, target)) for p in poses)
        return cls(l12, l13, l23, obs)


@dataclass
class CaseStudyReport:
    sensors: tuple
    bearings: dict
    radii: dict
    fused: tuple
    singles: dict
    solution: Solution
    ground_truth: Optional[tuple] = None
    errors: dict = field(default_factory=dict)

    @property
    def mean_single_error(self) -> Optional[float]:
        if not self.errors:
            return None
        return sum(self.errors[r] for r in ROLES) / len(ROLES)

    def to_json(self) -> dict:
        out = {
            "sensors": {s.id: list(s.xy) for s in self.sensors},
            "bearings_rad": dict(self.bearings),
            "radii_mm": dict(self.radii),
            "single_sensor": {k: list(v) for k, v in self.singles.items()},
            "fused": list(self.fused),
            "solution": self.solution.to_json(),
        }
        if self.ground_truth is not None:
            out["ground_truth"] = list(self.ground_truth)
            out["errors_mm"] = dict(self.errors)
            out["mean_single_error_mm"] = self.mean_single_error
        return out


def _dist(p, q) -> float:
    return math.hypot(p[0] - q[0], p[1] - q[1])


def run_case_study(inp: CaseStudyInput, ground_truth: Optional[Sequence[float]] = None) -> CaseStudyReport:
    """Lay out the rig, convert observations, fuse, and compare with single sensors."""
    poses = layout_triangle(inp.l12, inp.l13, inp.l23)
    bearings, radii, singles = {}, {}, {}
    for pose in poses:
        o = inp.observation(pose.id)
        bearing, r = observation_to_radius(pose.id, o.theta_rad, o.depth_mm)
        bearings[pose.id] = bearing
        radii[pose.id] = r
        singles[pose.id] = single_sensor_position(pose.id, pose, bearing, o.depth_mm)
    problem = TrilaterationProblem(poses, tuple(radii[p.id] for p in poses))
    sol = solve(problem, planar=True)
    fused = sol.position[:2]
    report = CaseStudyReport(poses, bearings, radii, fused, singles, sol)
    if ground_truth is not None:
        gt = (float(ground_truth[0]), float(ground_truth[1]))
        report.ground_truth = gt
        report.errors = {role: _dist(gt, singles[role]) for role in ROLES}
        report.errors["fused"] = _dist(gt, fused)
    return report
