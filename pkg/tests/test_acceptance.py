"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line that is repeated in the terminal
summary. The suites are generated once per module.
"""

import math
import os
import time
from collections import Counter

import numpy as np
import pytest

from axlecount.cli import main
from axlecount.detections import write_stream
from axlecount.geometry import AlignedBox, OrientedBox, box_iou
from axlecount.pipeline import evaluate, merge_metrics, run
from axlecount.simulator import build_suite, generate, traffic_scenario, with_noise
from axlecount.trax import DegenerateProjection, TirePoint, TraxParams, count_axles, project, rescale_points
from conftest import record
from oracles import grid_iou, halfplanes

SEED = 20240501
TIERS = ("easy", "medium", "hard")
N_PER_TIER = 200


def run_suite(scenarios):
    runs = []
    for sc in scenarios:
        frames, truth = generate(sc)
        results = run(frames)
        runs.append((results, evaluate(results, truth)))
    return runs


def accuracy(runs):
    return merge_metrics(rec for _, rec in runs)["overall"]


def noisy(scenario):
    # 2 px jitter, 10 % dropout, one occluder per scenario
    return with_noise(scenario, pos_sigma=2.0, dropout_prob=0.10, occluders=1)


@pytest.fixture(scope="module")
def clean_runs():
    t0 = time.perf_counter()
    runs = {tier: run_suite(build_suite(tier, N_PER_TIER, SEED)) for tier in TIERS}
    return runs, time.perf_counter() - t0


@pytest.fixture(scope="module")
def noisy_runs():
    return {tier: run_suite(noisy(sc) for sc in build_suite(tier, N_PER_TIER, SEED + 1))
            for tier in ("easy", "hard")}


def test_clean_suites_are_counted_exactly(clean_runs):
    runs, elapsed = clean_runs
    acc = {tier: accuracy(runs[tier])["trax_accuracy"] for tier in TIERS}
    ok = all(a == 1.0 for a in acc.values()) and elapsed < 30.0
    detail = ", ".join(f"{t} TRAX {a:.3f}" for t, a in acc.items())
    assert record(1, ok, f"{detail}; {3 * N_PER_TIER} scenarios in {elapsed:.1f} s (limit 30 s)")


def test_noisy_hard_tier_gap(noisy_runs):
    overall = accuracy(noisy_runs["hard"])
    trax, mode = overall["trax_accuracy"], overall["mode_accuracy"]
    # bounds TRAX >= 0.90 and mode <= 0.65, each allowed to miss by 0.1; order must hold
    ok = trax > mode and trax >= 0.90 - 0.1 and mode <= 0.65 + 0.1
    strict = trax >= 0.90 and mode <= 0.65
    assert record(2, ok, f"hard noisy TRAX {trax:.3f} vs mode {mode:.3f}; "
                         f"unrelaxed bounds {'met' if strict else 'missed'}")


def test_noisy_easy_tier_parity(noisy_runs):
    overall = accuracy(noisy_runs["easy"])
    trax, mode = overall["trax_accuracy"], overall["mode_accuracy"]
    assert record(3, trax >= 0.95 and mode >= 0.95, f"easy noisy TRAX {trax:.3f}, mode {mode:.3f} (both >= 0.95)")


def random_pair(rng):
    def obb():
        return OrientedBox(*rng.uniform(-4, 4, 2), *rng.uniform(0.5, 6, 2), rng.uniform(-math.pi, math.pi))

    def aabb():
        return AlignedBox(*rng.uniform(-6, 2, 2), *rng.uniform(0.5, 6, 2))

    kind = rng.integers(3)
    if kind == 0:
        return aabb(), aabb()
    if kind == 1:
        return aabb(), obb()
    return obb(), obb()


def hp(box):
    if isinstance(box, AlignedBox):
        cx, cy = box.center
        return halfplanes(cx, cy, box.w, box.h, 0.0)
    return halfplanes(box.cx, box.cy, box.w, box.h, box.theta)


def test_iou_matches_grid_oracle():
    rng = np.random.default_rng(SEED)
    worst, overlapping = 0.0, 0
    for _ in range(1000):
        a, b = random_pair(rng)
        got = box_iou(a, b)
        overlapping += got > 0
        worst = max(worst, abs(got - grid_iou(hp(a), hp(b), 1000)))
    assert record(4, worst <= 1e-2, f"1000 pairs ({overlapping} overlapping), "
                                    f"max |iou - grid| = {worst:.2e} (limit 1e-2)")


def seeded_points(seed):
    """Noisy tire centres of one rigid vehicle, sometimes longer than the band."""
    rng = np.random.default_rng(seed)
    n_axles = int(rng.integers(2, 7))
    offsets = np.cumsum(rng.uniform(40, 160, n_axles)) - 40
    band = float(rng.uniform(offsets[-1] * 0.6, offsets[-1] * 1.8))
    speed = float(rng.uniform(3, 8))
    heading = float(rng.uniform(-0.3, 0.3))
    d = (math.cos(heading), math.sin(heading))
    pts = []
    for t in range(int((band + offsets[-1]) / speed) + 2):
        for off in offsets:
            s = speed * t - off
            if 0 <= s <= band:
                dx, dy = rng.normal(0, 1.0, 2)
                pts.append(TirePoint(s * d[0] + dx, 300 + s * d[1] + dy, t))
    return pts


def transforms(rng):
    out = []
    for phi in rng.uniform(-math.pi, math.pi, 10):
        c, s = math.cos(phi), math.sin(phi)
        out.append((f"rotate {phi:.2f}", lambda p, c=c, s=s: TirePoint(c * p.x - s * p.y, s * p.x + c * p.y, p.t)))
    dx, dy = rng.uniform(-5000, 5000, 2)
    out.append(("translate", lambda p: TirePoint(p.x + dx, p.y + dy, p.t)))
    for k in (0.5, 2.0, 10.0):
        out.append((f"scale {k}", lambda p, k=k: TirePoint(k * p.x, k * p.y, p.t)))
    shift = int(rng.integers(-10000, 10000))
    out.append(("time shift", lambda p: TirePoint(p.x, p.y, p.t + shift)))
    return out


def test_count_is_invariant():
    rng = np.random.default_rng(SEED)
    checks, violations = 0, []
    for seed in range(50):
        pts = seeded_points(SEED + seed)
        base = count_axles(pts)
        for name, f in transforms(rng):
            checks += 1
            if count_axles([f(p) for p in pts]) != base:
                violations.append((seed, name))
    assert record(5, not violations, f"{checks} transformed counts, {len(violations)} violation(s)")


def partitions(result, params=TraxParams()):
    got = Counter(p for tr in result.tracks for p in tr.points)
    pts = result.points
    try:
        projected, _ = project(pts)
    except DegenerateProjection:
        # no axis: only the frames can be compared
        return Counter(p.t for p in got.elements()) == Counter(p.t for p in pts)
    return got == Counter(rescale_points(projected, params.c))


def test_tracks_partition_their_points(clean_runs, noisy_runs):
    suites = list(clean_runs[0].values()) + list(noisy_runs.values())
    checked, bad = 0, 0
    for suite in suites:
        for results, _ in suite:
            for res in results:
                for unit in (res,) + res.trailers:
                    checked += 1
                    bad += not partitions(unit)
    assert record(6, bad == 0, f"{checked} TRAX runs, {bad} without an exact partition")


def cli_round(root, seed, capsys):
    sims, res = os.path.join(root, "sims"), os.path.join(root, "res")
    for tier in TIERS:
        assert main(["simulate", "--difficulty", tier, "--n", "10", "--seed", str(seed), "--out", sims,
                     "--pos-sigma", "2", "--dropout", "0.1", "--occluders", "1", "--fp-rate", "0.2"]) == 0
    assert main(["count", sims, "--out", res]) == 0
    capsys.readouterr()
    assert main(["evaluate", res, sims, "--out", os.path.join(root, "metrics.json"),
                 "--csv", os.path.join(root, "rows.csv"), "--figure", os.path.join(root, "acc.svg")]) == 0
    files = {"<evaluate stdout>": capsys.readouterr().out.encode()}
    for dirpath, _, names in os.walk(root):
        for n in names:
            path = os.path.join(dirpath, n)
            with open(path, "rb") as fh:
                files[os.path.relpath(path, root)] = fh.read()
    return files


def test_cli_runs_are_byte_identical(tmp_path, capsys):
    a = cli_round(str(tmp_path / "a"), SEED, capsys)
    b = cli_round(str(tmp_path / "b"), SEED, capsys)
    differing = sorted(k for k in a.keys() | b.keys() if a.get(k) != b.get(k))
    assert record(7, not differing, f"{len(a) - 1} files and the evaluate table compared, "
                                    f"{len(differing)} differ")


@pytest.fixture(scope="module")
def traffic_stream(tmp_path_factory):
    frames, _ = generate(traffic_scenario(10_000, lanes=5, seed=SEED))
    frames = frames[:10_000]
    path = tmp_path_factory.mktemp("traffic") / "traffic.stream.jsonl"
    path.write_text(write_stream(frames))
    return str(path), frames


def test_count_throughput(traffic_stream, tmp_path):
    path, frames = traffic_stream
    assert len(frames) == 10_000
    peak = max(len(f.vehicles) for f in frames)
    times = []
    for i in range(2):
        t0 = time.perf_counter()
        assert main(["count", path, "--out", str(tmp_path / f"r{i}.jsonl")]) == 0
        times.append(time.perf_counter() - t0)
    best = min(times)
    ok = best < 5.0 and peak == 5
    assert record(8, ok, f"10000 frames, up to {peak} vehicles per frame: best {best:.2f} s "
                         f"of ({', '.join(f'{t:.2f}' for t in times)}) (limit 5 s)")
