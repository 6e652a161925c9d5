"""``depthtri`` command-line entry point.

Exit codes are stable: 0 ok, 2 format error, 3 empty region, 4 invalid
plan, 5 degenerate geometry, 6 triangle inequality violated.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Optional

from . import __version__, metrics
from .errors import (
    DegenerateGeometry,
    DegenerateTriangle,
    DivisionByZero,
    EmptyRegion,
    FormatError,
    InvalidPlan,
    OutOfBounds,
    TooFewFrames,
)
from .frames import Region, frame_files, frame_stats, read_frame
from .montecarlo import MonteCarloConfig, run_montecarlo
from .survey import (
    SurveyPlan,
    edge_json,
    entropy_json,
    resolution_json,
    ring_json,
    stats_json,
    rows_to_csv,
    run_survey,
)
from .trilateration import CaseStudyInput, TrilaterationProblem, run_case_study, solve

EXIT_OK = 0
EXIT_FORMAT = 2
EXIT_EMPTY_REGION = 3
EXIT_PLAN = 4
EXIT_GEOMETRY = 5
EXIT_TRIANGLE = 6


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _clean(obj):
    """Replace non-finite floats with None so the output is strict JSON."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def _envelope(command: str, seed, config: dict) -> dict:
    return {"tool": "depthtri", "version": __version__, "command": command, "seed": seed, "config": config}


def _load_json(path: str) -> dict:
    try:
        text = sys.stdin.read() if path == "-" else Path(path).read_text()
        obj = json.loads(text)
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(EXIT_FORMAT, f"cannot read {path}: {exc}") from exc
    if not isinstance(obj, dict):
        raise CliError(EXIT_FORMAT, f"{path}: top-level JSON must be an object")
    return obj


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _dump(report: dict) -> str:
    return json.dumps(_clean(report), indent=2, sort_keys=True) + "\n"


# -- assess ------------------------------------------------------------------

def cmd_assess(args) -> str:
    paths = []
    for p in args.inputs:
        p = Path(p)
        paths.extend(frame_files(p) if p.is_dir() else [p])
    if not paths:
        raise CliError(EXIT_FORMAT, "no frame files given")
    try:
        region = Region.parse(args.region) if args.region else None
    except ValueError as exc:
        raise CliError(EXIT_FORMAT, str(exc)) from exc
    try:
        frames = [read_frame(p) for p in paths]
    except OSError as exc:
        raise CliError(EXIT_FORMAT, str(exc)) from exc

    per_frame = []
    for path, frame in zip(paths, frames):
        entry = {
            "path": str(path),
            "width": frame.width,
            "height": frame.height,
            "stats": stats_json(frame_stats(frame, region)),
            "accuracy_mm": None,
            "resolution": None,
        }
        if args.true_distance is not None:
            entry["accuracy_mm"] = metrics.depth_accuracy(frame, region, args.true_distance)
        try:
            entry["resolution"] = resolution_json(metrics.depth_resolution(frame, region))
        except EmptyRegion:
            pass
        entry["edge"] = edge_json(metrics.edge_noise(frame))
        entry["ring"] = ring_json(metrics.structural_noise(frame, args.bin_width))
        per_frame.append(entry)

    entropy = None
    if len(frames) >= 2:
        try:
            entropy = entropy_json(metrics.depth_entropy(frames, region))
        except TooFewFrames:
            entropy = None

    config = {
        "inputs": [str(p) for p in paths],
        "true_distance_mm": args.true_distance,
        "region": None if region is None else [region.x, region.y, region.w, region.h],
        "ring_bin_px": args.bin_width,
    }
    if args.format == "csv":
        cols = ["path", "valid_count", "mean_mm", "stddev_mm", "min_mm", "max_mm", "accuracy_mm",
                "resolution_min_mm", "resolution_mean_mm", "resolution_max_mm", "edge_max_width_px"]
        lines = [",".join(cols)]
        for e in per_frame:
            res = e["resolution"] or {}
            vals = [e["path"], e["stats"]["valid_count"], e["stats"]["mean_mm"], e["stats"]["stddev_mm"],
                    e["stats"]["min_mm"], e["stats"]["max_mm"], e["accuracy_mm"], res.get("min_mm"),
                    res.get("mean_mm"), res.get("max_mm"), e["edge"]["max_width_px"]]
            lines.append(",".join("" if v is None else repr(v) if isinstance(v, float) else str(v) for v in vals))
        return "\n".join(lines) + "\n"
    report = _envelope("assess", args.seed, config)
    report["frames"] = per_frame
    report["entropy"] = entropy
    return _dump(report)


# -- survey ------------------------------------------------------------------

def cmd_survey(args) -> str:
    obj = _load_json(args.config) if args.config else {}
    if args.repeats is not None:
        obj["repeats"] = args.repeats
    plan = SurveyPlan.from_json(obj, seed=args.seed)
    rows = run_survey(plan)
    if args.csv:
        Path(args.csv).write_text(rows_to_csv(rows))
    if args.format == "csv":
        return rows_to_csv(rows)
    report = _envelope("survey", plan.seed, plan.to_json())
    report["positions"] = rows
    return _dump(report)


# -- trilateration -----------------------------------------------------------

def cmd_trilaterate(args) -> str:
    obj = _load_json(args.problem)
    try:
        problem = TrilaterationProblem.from_json(obj)
    except (DegenerateGeometry, DegenerateTriangle):
        raise
    except ValueError as exc:
        raise CliError(EXIT_FORMAT, str(exc)) from exc
    planar = bool(args.planar or obj.get("planar", False))
    sol = solve(problem, planar=planar)
    config = problem.to_json()
    config["planar"] = planar
    report = _envelope("trilaterate", args.seed, config)
    report["solution"] = sol.to_json()
    return _dump(report)


def cmd_casestudy(args) -> str:
    obj = _load_json(args.input)
    try:
        inp = CaseStudyInput.from_json(obj)
        gt = obj.get("ground_truth")
        if gt is not None:
            gt = (float(gt[0]), float(gt[1]))
    except (DegenerateGeometry, DegenerateTriangle):
        raise
    except (ValueError, TypeError, IndexError) as exc:
        raise CliError(EXIT_FORMAT, str(exc)) from exc
    rep = run_case_study(inp, gt)
    config = inp.to_json()
    config["ground_truth"] = None if gt is None else list(gt)
    report = _envelope("casestudy", args.seed, config)
    report["result"] = rep.to_json()
    return _dump(report)


def cmd_montecarlo(args) -> str:
    obj = _load_json(args.config) if args.config else {}
    if args.seed is not None:
        obj["seed"] = args.seed
    if args.trials is not None:
        obj["trials"] = args.trials
    try:
        cfg = MonteCarloConfig.from_json(obj)
    except (TypeError, KeyError, ValueError) as exc:
        if isinstance(exc, InvalidPlan):
            raise
        raise InvalidPlan(str(exc)) from exc
    res = run_montecarlo(cfg)
    summary = res.summary()
    report = _envelope("montecarlo", cfg.seed, summary.pop("config"))
    summary.pop("seed")
    report["result"] = summary
    return _dump(report)


# -- wiring ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--seed", type=int, default=None, help="master seed (u64)")
    common.add_argument("--format", choices=("json", "csv"), default="json")

    parser = argparse.ArgumentParser(prog="depthtri", description="Depth-sensor quality metrics, simulation and multi-sensor trilateration.")
    parser.add_argument("--version", action="version", version=f"depthtri {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("assess", parents=[common], help="metric report for frame files")
    p.add_argument("inputs", nargs="+", help="DTF1/CSV frame files or directories")
    p.add_argument("--true-distance", type=float, default=None, help="laser-measured distance, mm")
    p.add_argument("--region", default=None, help="pixel rectangle x,y,w,h")
    p.add_argument("--bin-width", type=float, default=metrics.DEFAULT_RING_BIN_PX, help="ring bin width, px")
    p.set_defaults(func=cmd_assess)

    p = sub.add_parser("survey", parents=[common], help="simulated key-position survey")
    p.add_argument("config", nargs="?", default=None, help="survey plan JSON (default grid if omitted)")
    p.add_argument("--repeats", type=int, default=None, help="frames per position")
    p.add_argument("--csv", default=None, help="also write the CSV grid here")
    p.set_defaults(func=cmd_survey)

    p = sub.add_parser("trilaterate", parents=[common], help="solve a trilateration problem")
    p.add_argument("problem", help="problem JSON, or - for stdin")
    p.add_argument("--planar", action="store_true", help="fix z to the first sensor's z")
    p.set_defaults(func=cmd_trilaterate)

    p = sub.add_parser("casestudy", parents=[common], help="three-sensor rig with single-sensor comparison")
    p.add_argument("input", help="case-study JSON, or - for stdin")
    p.set_defaults(func=cmd_casestudy)

    p = sub.add_parser("montecarlo", parents=[common], help="fused vs single-sensor error statistics")
    p.add_argument("config", nargs="?", default=None, help="Monte Carlo config JSON")
    p.add_argument("--trials", type=int, default=None)
    p.set_defaults(func=cmd_montecarlo)
    return parser


def _exit_code(exc: Exception) -> Optional[int]:
    if isinstance(exc, CliError):
        return exc.code
    if isinstance(exc, FormatError):
        return EXIT_FORMAT
    if isinstance(exc, (EmptyRegion, OutOfBounds)):
        return EXIT_EMPTY_REGION
    if isinstance(exc, InvalidPlan):
        return EXIT_PLAN
    if isinstance(exc, DegenerateTriangle):
        return EXIT_TRIANGLE
    if isinstance(exc, (DegenerateGeometry, DivisionByZero)):
        return EXIT_GEOMETRY
    return None


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = args.func(args)
    except Exception as exc:
        code = _exit_code(exc)
        if code is None:
            raise
        print(f"depthtri {args.command}: {exc}", file=sys.stderr)
        return code
    _emit(text, args.out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
