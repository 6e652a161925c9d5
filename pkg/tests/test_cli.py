import json
import math

import jsonschema
import numpy as np
import pytest

from depthtri import load_schema, reference_rig
from depthtri.cli import main
from depthtri.frames import DepthFrame, write_frame
from depthtri.simulator import NoiseModel, PlanarTarget, render_series
from depthtri.trilateration import CaseStudyInput, TrilaterationProblem


def run(argv, capsys):
    code = main([str(a) for a in argv])
    return code, capsys.readouterr()


def report(argv, capsys, schema):
    code, out = run(argv, capsys)
    assert code == 0, out.err
    doc = json.loads(out.out)
    jsonschema.validate(doc, load_schema(schema))
    return doc


def write_json(path, obj):
    path.write_text(json.dumps(obj))
    return path


# -- assess ------------------------------------------------------------------

def test_assess_constant_frame(tmp_path, capsys):
    write_frame(DepthFrame.constant(1000, 16, 12), tmp_path / "f.dtf")
    doc = report(["assess", tmp_path / "f.dtf", "--true-distance", 1000], capsys, "assess")
    assert doc["frames"][0]["accuracy_mm"] == 0.0
    assert doc["config"]["true_distance_mm"] == 1000


def test_assess_series_entropy(tmp_path, capsys):
    frames = render_series(PlanarTarget.wall(2000), NoiseModel(seed=4, width=64, height=48), 30)
    for t, f in enumerate(frames):
        write_frame(f, tmp_path / f"frame_{t:02d}.dtf")
    doc = report(["assess", tmp_path, "--region", "10,10,40,30"], capsys, "assess")
    ent = doc["entropy"]
    assert ent["frame_count"] == 30
    assert 0 < ent["mean_bits"] <= math.log2(29)
    assert ent["max_bits"] <= math.log2(29)


def test_assess_csv_output(tmp_path, capsys):
    write_frame(DepthFrame.constant(1500, 8, 8), tmp_path / "f.csv")
    code, out = run(["assess", tmp_path / "f.csv", "--format", "csv", "--true-distance", 1500], capsys)
    assert code == 0
    header, row = out.out.splitlines()
    assert header.startswith("path,valid_count") and ",64,1500.0,0.0," in row


def test_assess_writes_out_file(tmp_path, capsys):
    write_frame(DepthFrame.constant(1000, 4, 4), tmp_path / "f.dtf")
    code, out = run(["assess", tmp_path / "f.dtf", "--out", tmp_path / "r.json"], capsys)
    assert code == 0 and out.out == ""
    jsonschema.validate(json.loads((tmp_path / "r.json").read_text()), load_schema("assess"))


def test_assess_malformed_header(tmp_path, capsys):
    (tmp_path / "bad.dtf").write_bytes(b"DTF1 four 4\n" + bytes(32))
    assert run(["assess", tmp_path / "bad.dtf"], capsys)[0] == 2


def test_assess_truncated(tmp_path, capsys):
    (tmp_path / "t.dtf").write_bytes(b"DTF1 4 4\n" + bytes(20))
    assert run(["assess", tmp_path / "t.dtf"], capsys)[0] == 2


def test_assess_empty_region(tmp_path, capsys):
    a = np.zeros((10, 10), np.uint16)
    a[0, 0] = 1000
    write_frame(DepthFrame(a), tmp_path / "f.dtf")
    assert run(["assess", tmp_path / "f.dtf", "--region", "5,5,3,3"], capsys)[0] == 3
    assert run(["assess", tmp_path / "f.dtf", "--region", "5,5,30,3"], capsys)[0] == 3


# -- survey ------------------------------------------------------------------

def test_survey_default_plan(tmp_path, capsys):
    doc = report(["survey", "--repeats", 2, "--seed", 5, "--csv", tmp_path / "grid.csv"], capsys, "survey")
    rows = doc["positions"]
    assert len(rows) == 40
    assert sum(r["plane"] == "horizontal" for r in rows) == 21
    green = [r for r in rows if r["region"] == "green"]
    assert green and all(abs(r["accuracy_mm"]) < 2 for r in green)
    for r in rows:
        if not r["out_of_range"]:
            assert 500 <= r["center_mm"][2] <= 4000
    assert (tmp_path / "grid.csv").read_text().count("\n") == 41


def test_survey_flags_too_close(tmp_path, capsys):
    plan = write_json(tmp_path / "plan.json", {"repeats": 2, "positions": [
        {"center": [0, 0, 300]}, {"center": [0, 0, 1500]}]})
    doc = report(["survey", plan], capsys, "survey")
    first, second = doc["positions"]
    assert first["out_of_range"] and first["stats"] is None
    assert not second["out_of_range"]


def test_survey_csv_is_deterministic(tmp_path, capsys):
    plan = write_json(tmp_path / "plan.json", {"repeats": 3, "positions": [
        {"center": [0, 0, 1000]}, {"center": [300, 0, 2500], "plane": "vertical"}]})
    outs = []
    for k in range(2):
        code, _ = run(["survey", plan, "--seed", 77, "--format", "csv", "--out", tmp_path / f"{k}.csv"], capsys)
        assert code == 0
        outs.append((tmp_path / f"{k}.csv").read_bytes())
    assert outs[0] == outs[1]
    code, _ = run(["survey", plan, "--seed", 78, "--format", "csv", "--out", tmp_path / "x.csv"], capsys)
    assert (tmp_path / "x.csv").read_bytes() != outs[0]


@pytest.mark.parametrize("plan", [
    {"positions": []},
    {"positions": [{"center": [0, 0]}]},
    {"bogus": 1},
    {"repeats": 0},
])
def test_survey_invalid_plan(tmp_path, capsys, plan):
    assert run(["survey", write_json(tmp_path / "p.json", plan)], capsys)[0] == 4


def test_survey_unreadable_config(tmp_path, capsys):
    (tmp_path / "p.json").write_text("{not json")
    assert run(["survey", tmp_path / "p.json"], capsys)[0] == 2


# -- trilateration -----------------------------------------------------------

def test_trilaterate(tmp_path, capsys):
    prob = TrilaterationProblem.from_target([(0, 0, 0), (3000, 0, 0), (0, 3000, 0), (0, 0, 3000)], (700, 800, 900))
    jsonschema.validate(prob.to_json(), load_schema("problem"))
    doc = report(["trilaterate", write_json(tmp_path / "p.json", prob.to_json())], capsys, "trilaterate")
    assert doc["solution"]["position"] == pytest.approx([700, 800, 900], abs=1e-6)


def test_trilaterate_planar(tmp_path, capsys):
    obj = {"sensors": [{"id": "a", "pos": [0, 0, 0]}, {"id": "b", "pos": [2, 0, 0]}, {"id": "c", "pos": [0, 2, 0]}],
           "radii": [math.sqrt(2)] * 3}
    doc = report(["trilaterate", write_json(tmp_path / "p.json", obj), "--planar"], capsys, "trilaterate")
    assert doc["solution"]["position"] == pytest.approx([1, 1, 0])
    assert doc["config"]["planar"] is True


def test_trilaterate_collinear(tmp_path, capsys):
    obj = {"sensors": [{"id": "a", "pos": [0, 0]}, {"id": "b", "pos": [1, 0]}, {"id": "c", "pos": [2, 0]}],
           "radii": [1, 1, 1]}
    assert run(["trilaterate", write_json(tmp_path / "p.json", obj), "--planar"], capsys)[0] == 5


def test_trilaterate_malformed(tmp_path, capsys):
    assert run(["trilaterate", write_json(tmp_path / "p.json", {"sensors": []})], capsys)[0] == 2


# -- case study and Monte Carlo ----------------------------------------------

def test_casestudy_table(tmp_path, capsys):
    obj = reference_rig.published_input().to_json()
    obj["ground_truth"] = list(reference_rig.GROUND_TRUTH)
    jsonschema.validate(obj, load_schema("casestudy_input"))
    doc = report(["casestudy", write_json(tmp_path / "c.json", obj)], capsys, "casestudy")
    errs = doc["result"]["errors_mm"]
    for key, want in reference_rig.PUBLISHED_ERRORS.items():
        assert abs(errs[key] - want) <= 0.15


def test_casestudy_exact(tmp_path, capsys):
    side = math.hypot(2000, 8000)
    obj = CaseStudyInput.synthesize(4000, side, side, (2000, 5000)).to_json()
    obj["ground_truth"] = [2000, 5000]
    doc = report(["casestudy", write_json(tmp_path / "c.json", obj)], capsys, "casestudy")
    assert max(doc["result"]["errors_mm"].values()) < 1e-6


def test_casestudy_bad_triangle(tmp_path, capsys):
    obj = CaseStudyInput.synthesize(4000, 5000, 5000, (2000, 3000)).to_json()
    obj["baselines"] = {"l12": 1, "l13": 1, "l23": 3}
    assert run(["casestudy", write_json(tmp_path / "c.json", obj)], capsys)[0] == 6


def test_casestudy_degenerate_angle(tmp_path, capsys):
    obj = CaseStudyInput.synthesize(4000, 5000, 5000, (2000, 3000)).to_json()
    obj["obs"][0]["theta_rad"] = math.pi / 2
    assert run(["casestudy", write_json(tmp_path / "c.json", obj)], capsys)[0] == 5


def test_montecarlo(tmp_path, capsys):
    doc = report(["montecarlo", "--seed", 7, "--trials", 1000], capsys, "montecarlo")
    res = doc["result"]
    assert doc["seed"] == 7 and doc["config"]["radius_sigma_mm"] == 20
    assert res["median_fused_error_mm"] < res["median_mean_single_error_mm"]
    assert res["fused_beats_mean_single"] is True


def test_montecarlo_config_file(tmp_path, capsys):
    cfg = write_json(tmp_path / "m.json", {"trials": 10, "bearing_sigma_deg": 0, "seed": 2})
    doc = report(["montecarlo", cfg], capsys, "montecarlo")
    again = report(["montecarlo", cfg], capsys, "montecarlo")
    assert doc == again and doc["result"]["trials"] == 10


def test_montecarlo_bad_config(tmp_path, capsys):
    assert run(["montecarlo", write_json(tmp_path / "m.json", {"trials": -1})], capsys)[0] == 4


@pytest.mark.parametrize("name", ["assess", "survey", "trilaterate", "casestudy", "montecarlo",
                                  "problem", "casestudy_input"])
def test_shipped_schemas_are_valid(name):
    jsonschema.Draft202012Validator.check_schema(load_schema(name))
