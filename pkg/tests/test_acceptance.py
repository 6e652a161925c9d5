"""Acceptance gate: one PASS/FAIL line per criterion, with runtime budgets."""

import math
import time

import numpy as np
import pytest

from depthtri import metrics, reference_rig
from depthtri.frames import DepthFrame, Region, frame_stats
from depthtri.montecarlo import MonteCarloConfig, run_montecarlo
from depthtri.simulator import NoiseModel, PlanarTarget, render_frame, render_series
from depthtri.trilateration import TrilaterationProblem, run_case_study, solve

import oracles

pytestmark = pytest.mark.acceptance


def gate(capsys, number, name, ok, elapsed, budget, detail):
    ok = ok and elapsed < budget
    with capsys.disabled():
        print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number}: {name} ({detail}; {elapsed:.2f}s < {budget}s)")
    assert ok, detail


def test_criterion_1_table_errors(capsys):
    t0 = time.perf_counter()
    printed = reference_rig.published_errors()
    rep = run_case_study(reference_rig.published_input(), reference_rig.GROUND_TRUTH)
    elapsed = time.perf_counter() - t0
    want = reference_rig.PUBLISHED_ERRORS
    worst = max(
        max(abs(printed[k] - want[k]) for k in want),
        max(abs(rep.errors[k] - want[k]) for k in want),
    )
    detail = ", ".join(f"{k} {rep.errors[k]:.2f}" for k in ("k1", "k2", "k3", "fused"))
    gate(capsys, 1, "error table within 0.15 mm", worst <= 0.15, elapsed, 1, f"{detail}, worst dev {worst:.3f}")


def test_criterion_2_fusion_beats_mean(capsys):
    t0 = time.perf_counter()
    res = run_montecarlo(MonteCarloConfig(trials=1000, radius_sigma_mm=20.0, seed=7))
    elapsed = time.perf_counter() - t0
    detail = f"median fused {res.median_fused:.2f} mm vs mean-single {res.median_mean_single:.2f} mm"
    gate(capsys, 2, "fused median < mean single-sensor median", res.median_fused < res.median_mean_single,
         elapsed, 5, detail)


def test_criterion_3_zero_noise_exactness(capsys):
    rng = np.random.default_rng(2024)
    worst = 0.0
    t0 = time.perf_counter()
    done = 0
    while done < 200:
        planar = done % 2 == 0
        n = 3 if planar else int(rng.integers(4, 9))
        pts = rng.uniform(-5000, 5000, (n, 3))
        target = rng.uniform(-3000, 3000, 3)
        if planar:
            pts[:, 2] = 0.0
            target[2] = 0.0
        A = (pts[1:] - pts[0])[:, : 2 if planar else 3]
        if np.linalg.svd(A, compute_uv=False)[-1] < 100.0:
            continue
        sol = solve(TrilaterationProblem.from_target(pts, target), planar=planar)
        worst = max(worst, float(np.linalg.norm(np.subtract(sol.position, target))))
        done += 1
    elapsed = time.perf_counter() - t0
    gate(capsys, 3, "200 exact problems recovered", worst < 1e-6, elapsed, 5, f"max error {worst:.2e} mm")


def test_criterion_4_entropy_identities(capsys):
    t0 = time.perf_counter()
    def one_pixel(seq):
        return metrics.depth_entropy([DepthFrame([[v, 0], [0, 0]]) for v in seq]).entropy_bits[0, 0]

    constant = one_pixel([1800] * 31)
    split = one_pixel([1800 + (k % 2) for k in range(31)])
    rng = np.random.default_rng(9)
    stack = (2000 + rng.integers(-3, 4, (30, 40, 40))).astype(np.uint16)
    ent = metrics.depth_entropy([DepthFrame(f) for f in stack])
    bound = math.log2(29)
    sim = metrics.depth_entropy(render_series(PlanarTarget.wall(2000), NoiseModel(seed=1), 30),
                                Region(200, 150, 80, 60))
    elapsed = time.perf_counter() - t0
    ok = constant == 0.0 and split == 1.0 and ent.max_bits <= bound and sim.max_bits <= bound
    detail = f"constant {constant}, 15/15 split {split}, max {max(ent.max_bits, sim.max_bits):.3f} <= {bound:.3f}"
    gate(capsys, 4, "entropy identities and bound", ok, elapsed, 1, detail)


def test_criterion_5_resolution_oracle(capsys):
    rng = np.random.default_rng(55)
    mismatches = 0
    t0 = time.perf_counter()
    for _ in range(100):
        h, w = rng.integers(2, 33, 2)
        a = rng.integers(900, 1100, (h, w)).astype(np.uint16)
        a[rng.random((h, w)) < 0.1] = 0
        if not oracles.adjacent_pairs(a.tolist()):
            a[0, :2] = 1000
        res = metrics.depth_resolution(DepthFrame(a))
        if (res.min_mm, res.mean_mm, res.max_mm) != oracles.resolution(a.tolist()):
            mismatches += 1
    elapsed = time.perf_counter() - t0
    gate(capsys, 5, "resolution equals pair oracle bitwise", mismatches == 0, elapsed, 5,
         f"{mismatches} mismatches in 100 regions")


def test_criterion_6_simulator_closed_loop(capsys):
    t0 = time.perf_counter()
    wall = PlanarTarget.wall(2000)
    acc = metrics.depth_accuracy(render_frame(wall, NoiseModel.noiseless()), None, 2000)
    ok_a = abs(acc) <= 0.5

    sds = []
    for seed in range(100):
        f = render_frame(wall, NoiseModel(seed=seed))
        sds.append(frame_stats(f, Region.centered(f, 70, 50)).stddev_mm)
    ok_b = 0.8 <= min(sds) and max(sds) <= 1.6

    stack = np.stack([f.samples.astype(np.int64) for f in render_series(wall, NoiseModel(seed=3), 30)])
    valid = (stack != 0).all(axis=0)
    ptp = int((stack.max(axis=0) - stack.min(axis=0))[valid].max())
    ok_c = ptp <= 6

    plate = PlanarTarget.plate((0, 0, 1000), 376, 301)
    edge = metrics.edge_noise(render_frame(plate, NoiseModel(seed=4), background=PlanarTarget.wall(1600)))
    ok_d = edge.max_width_px == 2

    prof = metrics.structural_noise(render_frame(PlanarTarget.wall(1000), NoiseModel(pixel_sigma_mm=0)))
    means = [m for _, m in prof.present()]
    ok_e = all(b <= a for a, b in zip(means, means[1:]))
    elapsed = time.perf_counter() - t0

    detail = (f"a accuracy {acc:+.2f}; b stddev [{min(sds):.2f}, {max(sds):.2f}]; c p2p {ptp}; "
              f"d edge {edge.max_width_px}px; e ring drop {means[0] - means[-1]:.2f} monotone={ok_e}")
    gate(capsys, 6, "simulator closed loop", ok_a and ok_b and ok_c and ok_d and ok_e, elapsed, 30, detail)


def test_criterion_7_hardware_numbers_as_defaults(capsys):
    # raw hardware captures cannot be reproduced; they only set simulator defaults
    t0 = time.perf_counter()
    m = NoiseModel()
    ok = (m.pixel_sigma_mm, m.jitter_span_mm, m.edge_width_px) == (1.2, 6, 2)
    elapsed = time.perf_counter() - t0
    gate(capsys, 7, "hardware measurements not reproducible; used as defaults only", ok, elapsed, 1,
         "pixel_sigma 1.2 mm, jitter span 6 mm, edge width 2 px")
