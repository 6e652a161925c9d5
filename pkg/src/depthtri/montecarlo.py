"""Monte Carlo comparison of fused vs. single-sensor localisation.

Each sensor measures a range and a bearing to the target. The range gets
Gaussian noise ``radius_sigma_mm``, the bearing Gaussian noise
``bearing_sigma_deg``, and the pair is re-expressed as the sensor's
(angle, depth) report. Trilateration consumes only the ranges, while a
single sensor places the target along its own (noisy) bearing. With
``bearing_sigma_deg = 0`` a single sensor errs by exactly its range noise.

Trial ``i`` draws from ``default_rng([seed, i])``, so trials are
independent of how they are scheduled.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import reference_rig
from .errors import InvalidPlan
from .trilateration import (
    ROLES,
    CaseStudyInput,
    Observation,
    layout_triangle,
    observation_to_radius,
    observe,
    run_case_study,
)

# RMS bearing error of the published single-sensor positions (0.58, 0.94, 0.0 deg)
DEFAULT_BEARING_SIGMA_DEG = 0.64


@dataclass(frozen=True)
class MonteCarloConfig:
    trials: int = 1000
    radius_sigma_mm: float = 20.0
    bearing_sigma_deg: float = DEFAULT_BEARING_SIGMA_DEG
    baselines: tuple = field(default_factory=reference_rig.rig_baselines)
    target: tuple = reference_rig.GROUND_TRUTH
    seed: int = 7

    def __post_init__(self):
        if self.trials < 1:
            raise InvalidPlan("trials must be >= 1")
        if self.radius_sigma_mm < 0 or self.bearing_sigma_deg < 0:
            raise InvalidPlan("noise levels must be >= 0")
        if self.seed < 0:
            raise InvalidPlan("seed must be >= 0")
        object.__setattr__(self, "baselines", tuple(float(v) for v in self.baselines))
        object.__setattr__(self, "target", tuple(float(v) for v in self.target))

    @classmethod
    def from_json(cls, obj: dict) -> "MonteCarloConfig":
        unknown = set(obj) - set(cls.__dataclass_fields__)
        if unknown:
            raise InvalidPlan(f"unknown Monte Carlo fields: {sorted(unknown)}")
        obj = dict(obj)
        if isinstance(obj.get("baselines"), dict):
            b = obj["baselines"]
            obj["baselines"] = (b["l12"], b["l13"], b["l23"])
        return cls(**obj)

    def to_json(self) -> dict:
        out = asdict(self)
        out["baselines"] = dict(zip(("l12", "l13", "l23"), self.baselines))
        out["target"] = list(self.target)
        return out


@dataclass(frozen=True)
class MonteCarloResult:
    config: MonteCarloConfig
    fused_errors: np.ndarray
    single_errors: np.ndarray  # (trials, 3), columns in ROLES order

    @property
    def mean_single_errors(self) -> np.ndarray:
        return self.single_errors.mean(axis=1)

    @property
    def median_fused(self) -> float:
        return float(np.median(self.fused_errors))

    @property
    def median_mean_single(self) -> float:
        return float(np.median(self.mean_single_errors))

    @property
    def fused_wins(self) -> bool:
        return self.median_fused < self.median_mean_single

    def summary(self) -> dict:
        return {
            "seed": self.config.seed,
            "config": self.config.to_json(),
            "trials": int(self.fused_errors.size),
            "median_fused_error_mm": self.median_fused,
            "median_mean_single_error_mm": self.median_mean_single,
            "median_single_error_mm": {
                role: float(np.median(self.single_errors[:, k])) for k, role in enumerate(ROLES)
            },
            "fraction_fused_better": float(np.mean(self.fused_errors < self.mean_single_errors)),
            "fused_beats_mean_single": self.fused_wins,
        }


def noisy_input(cfg: MonteCarloConfig, rng: np.random.Generator) -> CaseStudyInput:
    l12, l13, l23 = cfg.baselines
    poses = layout_triangle(l12, l13, l23)
    obs = []
    for pose in poses:
        theta, depth = observe(pose.id, pose, cfg.target)
        bearing, r = observation_to_radius(pose.id, theta, depth)
        r = r + rng.normal(0.0, cfg.radius_sigma_mm)
        bearing = bearing + math.radians(rng.normal(0.0, cfg.bearing_sigma_deg))
        if pose.id == "k3":
            obs.append(Observation("k3", bearing, r * math.cos(bearing)))
        else:
            obs.append(Observation(pose.id, math.pi / 2 - bearing, r * math.sin(bearing)))
    return CaseStudyInput(l12, l13, l23, tuple(obs))


def run_montecarlo(cfg: MonteCarloConfig) -> MonteCarloResult:
    fused = np.empty(cfg.trials)
    singles = np.empty((cfg.trials, len(ROLES)))
    for i in range(cfg.trials):
        rng = np.random.default_rng([cfg.seed, i])
        report = run_case_study(noisy_input(cfg, rng), cfg.target)
        fused[i] = report.errors["fused"]
        singles[i] = [report.errors[r] for r in ROLES]
    return MonteCarloResult(cfg, fused, singles)
