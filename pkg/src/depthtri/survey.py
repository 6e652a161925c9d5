"""Simulated accuracy survey over a grid of key target positions."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import metrics
from .errors import DepthTriError, InvalidPlan
from .frames import Region, frame_stats
from .simulator import Camera, NoiseModel, PlanarTarget, render_frame, render_series

# 19-inch 5:4 monitor face
DEFAULT_PLATE_MM = (376.0, 301.0)
DEFAULT_REPEATS = 30
# backdrop behind each plate so its zero contour is bounded on both sides
DEFAULT_BACKGROUND_OFFSET_MM = 500.0
SHELLS_MM = (1000.0, 2000.0, 3000.0, 4000.0)
HORIZONTAL_FAN_DEG = (-25.0, -12.5, 0.0, 12.5, 25.0)
VERTICAL_FAN_DEG = (-20.0, -10.0, 10.0, 20.0)
MID_SHELLS_MM = (1500.0, 2500.0, 3500.0)


@dataclass(frozen=True)
class KeyPosition:
    center: tuple
    plane: str = "horizontal"
    normal: tuple = (0.0, 0.0, -1.0)
    repeats: int = DEFAULT_REPEATS

    def to_json(self) -> dict:
        return {"center": list(self.center), "plane": self.plane,
                "normal": list(self.normal), "repeats": self.repeats}


def default_positions(repeats: int = DEFAULT_REPEATS) -> list:
    """21 horizontal-plane and 19 vertical-plane positions fanned over the view cone.

    Horizontal: a 0.5 m centre point plus five bearings on each 1-4 m shell.
    Vertical: four off-axis elevations on each shell plus on-axis points
    between the shells, so no position repeats a horizontal one.
    """
    out = [KeyPosition((0.0, 0.0, 500.0), "horizontal", repeats=repeats)]
    for z in SHELLS_MM:
        for a in HORIZONTAL_FAN_DEG:
            out.append(KeyPosition((z * math.tan(math.radians(a)), 0.0, z), "horizontal", repeats=repeats))
    for z in SHELLS_MM:
        for a in VERTICAL_FAN_DEG:
            out.append(KeyPosition((0.0, z * math.tan(math.radians(a)), z), "vertical", repeats=repeats))
    for z in MID_SHELLS_MM:
        out.append(KeyPosition((0.0, 0.0, z), "vertical", repeats=repeats))
    return out


@dataclass(frozen=True)
class SurveyPlan:
    positions: tuple
    noise: NoiseModel = field(default_factory=NoiseModel)
    plate_mm: tuple = DEFAULT_PLATE_MM
    background_offset_mm: Optional[float] = DEFAULT_BACKGROUND_OFFSET_MM
    ring_bin_px: float = metrics.DEFAULT_RING_BIN_PX
    seed: int = 0

    @classmethod
    def default(cls, seed: int = 0, repeats: int = DEFAULT_REPEATS) -> "SurveyPlan":
        return cls(tuple(default_positions(repeats)), seed=seed)

    @classmethod
    def from_json(cls, obj: dict, seed: Optional[int] = None) -> "SurveyPlan":
        try:
            known = {"positions", "noise", "plate_mm", "background_offset_mm", "ring_bin_px", "seed", "repeats"}
            unknown = set(obj) - known
            if unknown:
                raise InvalidPlan(f"unknown survey fields: {sorted(unknown)}")
            repeats = int(obj.get("repeats", DEFAULT_REPEATS))
            if "positions" in obj:
                positions = tuple(
                    KeyPosition(
                        tuple(float(c) for c in p["center"]),
                        str(p.get("plane", "horizontal")),
                        tuple(float(c) for c in p.get("normal", (0.0, 0.0, -1.0))),
                        int(p.get("repeats", repeats)),
                    )
                    for p in obj["positions"]
                )
            else:
                positions = tuple(default_positions(repeats))
            noise = NoiseModel.from_json(obj.get("noise", {}))
            plan = cls(
                positions=positions,
                noise=noise,
                plate_mm=tuple(float(v) for v in obj.get("plate_mm", DEFAULT_PLATE_MM)),
                background_offset_mm=obj.get("background_offset_mm", DEFAULT_BACKGROUND_OFFSET_MM),
                ring_bin_px=float(obj.get("ring_bin_px", metrics.DEFAULT_RING_BIN_PX)),
                seed=int(obj.get("seed", 0) if seed is None else seed),
            )
        except InvalidPlan:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidPlan(f"malformed survey plan: {exc}") from exc
        plan.validate()
        return plan

    def validate(self) -> None:
        if not self.positions:
            raise InvalidPlan("plan has no positions")
        for k, p in enumerate(self.positions):
            if len(p.center) != 3 or not all(math.isfinite(c) for c in p.center):
                raise InvalidPlan(f"position {k}: center must be three finite numbers")
            if p.repeats < 1:
                raise InvalidPlan(f"position {k}: repeats must be >= 1")
            if p.plane not in ("horizontal", "vertical"):
                raise InvalidPlan(f"position {k}: plane must be horizontal or vertical")
        if len(self.plate_mm) != 2 or min(self.plate_mm) <= 0:
            raise InvalidPlan("plate_mm must be two positive lengths")
        if self.background_offset_mm is not None and not self.background_offset_mm > 0:
            raise InvalidPlan("background_offset_mm must be positive or null")
        if self.ring_bin_px < 1:
            raise InvalidPlan("ring_bin_px must be >= 1")
        if not 0 <= self.seed < 2 ** 64:
            raise InvalidPlan("seed must be an unsigned 64-bit integer")

    def to_json(self) -> dict:
        return {
            "seed": self.seed,
            "noise": self.noise.to_json(),
            "plate_mm": list(self.plate_mm),
            "background_offset_mm": self.background_offset_mm,
            "ring_bin_px": self.ring_bin_px,
            "positions": [p.to_json() for p in self.positions],
        }


def position_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1, np.uint64)[0])


def plate_region(target: PlanarTarget, model: NoiseModel) -> Optional[Region]:
    """Pixel box inside the plate's image, inset past the zeroed edge band."""
    cam = Camera.for_model(model)
    u, v = target.axes()
    hw, hh = target.extent[0] / 2, target.extent[1] / 2
    c = np.array(target.center)
    corners = [c + sx * hw * u + sy * hh * v for sx in (-1, 1) for sy in (-1, 1)]
    if min(p[2] for p in corners) <= 0:
        return None
    px = np.array([cam.project(p) for p in corners])
    inset = model.edge_width_px + 1
    x0 = max(int(math.ceil(px[:, 0].min())) + inset, 0)
    y0 = max(int(math.ceil(px[:, 1].min())) + inset, 0)
    x1 = min(int(math.floor(px[:, 0].max())) - inset, model.width - 1)
    y1 = min(int(math.floor(px[:, 1].max())) - inset, model.height - 1)
    if x1 < x0 or y1 < y0:
        return None
    return Region(x0, y0, x1 - x0 + 1, y1 - y0 + 1)


def survey_position(plan: SurveyPlan, index: int) -> dict:
    pos = plan.positions[index]
    region = metrics.classify_region(pos.center, plan.noise.cone)
    row = {
        "index": index,
        "plane": pos.plane,
        "center_mm": list(pos.center),
        "region": region.value,
        "out_of_range": region == metrics.AccuracyRegion.OUT_OF_VIEW,
        "repeats": pos.repeats,
        "region_px": None,
        "stats": None,
        "accuracy_mm": None,
        "resolution": None,
        "entropy": None,
        "edge": None,
        "ring": None,
    }
    if row["out_of_range"]:
        return row
    model = plan.noise.with_seed(position_seed(plan.seed, index))
    target = PlanarTarget.plate(pos.center, *plan.plate_mm, normal=pos.normal)
    box = plate_region(target, model)
    if box is not None:
        row["region_px"] = [box.x, box.y, box.w, box.h]
    background = None
    if plan.background_offset_mm is not None:
        background = PlanarTarget.wall(pos.center[2] + plan.background_offset_mm)
    try:
        if pos.repeats >= 2:
            frames = render_series(target, model, pos.repeats, background)
        else:
            frames = [render_frame(target, model, 0, background)]
        first = frames[0]
        st = frame_stats(first, box)
    except DepthTriError:
        row["out_of_range"] = True
        return row
    row["stats"] = stats_json(st)
    row["accuracy_mm"] = metrics.depth_accuracy(first, box, pos.center[2])
    try:
        row["resolution"] = resolution_json(metrics.depth_resolution(first, box))
    except DepthTriError:
        pass
    if len(frames) >= 2:
        row["entropy"] = entropy_json(metrics.depth_entropy(frames, box))
    row["edge"] = edge_json(metrics.edge_noise(first))
    row["ring"] = ring_json(metrics.structural_noise(first, plan.ring_bin_px))
    return row


def run_survey(plan: SurveyPlan) -> list:
    plan.validate()
    return [survey_position(plan, k) for k in range(len(plan.positions))]


# -- serialisation helpers shared with the CLI -------------------------------

def stats_json(st) -> dict:
    return {"mean_mm": st.mean_mm, "stddev_mm": st.stddev_mm, "min_mm": st.min_mm,
            "max_mm": st.max_mm, "valid_count": st.valid_count}


def resolution_json(res) -> dict:
    return {"min_mm": res.min_mm, "mean_mm": res.mean_mm, "max_mm": res.max_mm,
            "stddev_mm": res.stddev_mm, "pair_count": res.pair_count}


def entropy_json(ent) -> dict:
    return {"mean_bits": ent.mean_bits, "stddev_bits": ent.stddev_bits,
            "max_bits": ent.max_bits, "valid_count": ent.valid_count,
            "frame_count": ent.frame_count}


def edge_json(edge) -> dict:
    return {"contour_pixel_count": edge.contour_pixel_count,
            "max_width_px": edge.max_width_px,
            "width_histogram": {str(k): v for k, v in edge.width_histogram.items()}}


def ring_json(profile) -> dict:
    present = profile.present()
    return {
        "center_px": list(profile.center_px),
        "bin_count": len(profile.bin_radius_px),
        "inner_mean_mm": present[0][1],
        "outer_mean_mm": present[-1][1],
        "drop_mm": present[0][1] - present[-1][1],
    }


CSV_COLUMNS = (
    "index", "plane", "x_mm", "y_mm", "z_mm", "region", "out_of_range", "region_px",
    "valid_count", "mean_mm", "stddev_mm", "min_mm", "max_mm", "accuracy_mm",
    "resolution_min_mm", "resolution_mean_mm", "resolution_max_mm", "resolution_stddev_mm",
    "entropy_mean_bits", "entropy_stddev_bits", "edge_max_width_px", "ring_drop_mm",
)


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def rows_to_csv(rows: list) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        st = row["stats"] or {}
        res = row["resolution"] or {}
        ent = row["entropy"] or {}
        x, y, z = row["center_mm"]
        writer.writerow([_cell(v) for v in (
            row["index"], row["plane"], x, y, z, row["region"], row["out_of_range"],
            None if row["region_px"] is None else " ".join(map(str, row["region_px"])),
            st.get("valid_count"), st.get("mean_mm"), st.get("stddev_mm"), st.get("min_mm"),
            st.get("max_mm"), row["accuracy_mm"], res.get("min_mm"), res.get("mean_mm"),
            res.get("max_mm"), res.get("stddev_mm"), ent.get("mean_bits"), ent.get("stddev_bits"),
            (row["edge"] or {}).get("max_width_px"), (row["ring"] or {}).get("drop_mm"),
        )])
    return buf.getvalue()
