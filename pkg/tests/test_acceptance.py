"""Acceptance criteria, each at its stated tolerance.

Every test prints one ``ACCEPTANCE <n> PASS|FAIL ...`` line (visible even
with output capture on) before asserting.
"""
import math
import statistics
import struct
import time

import numpy as np
import pytest

from hsmc.clique import brute_force_max_clique, is_clique, solve_max_clique
from hsmc.corr import PointCloud, prune_semantic
from hsmc.geom import angular_error, random_transform, rotation_from_axis_angle, transform_errors
from hsmc.graph import build_class_subgraphs, random_graph
from hsmc.io import (
    read_correspondences_csv,
    read_label_file,
    read_point_cloud_bin,
    read_result,
    write_correspondences_csv,
    write_result,
)
from hsmc.pipeline import PipelineConfig, RegistrationResult, compute_seed_inliers, run_flat, run_hsmc
from hsmc.synth import SceneSpec, displaced, generate_scene, generate_two_motion_scene


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\nACCEPTANCE {n} {'PASS' if ok else 'FAIL'} {detail}")
        return ok

    return emit


def test_1_solver_exactness(report):
    rng = np.random.default_rng(20240601)
    bad = []
    for k in range(200):
        n = int(rng.integers(5, 26))
        p = (0.3, 0.5, 0.8)[k % 3]
        g = random_graph(rng, n, p)
        got = solve_max_clique(g).best_clique.size
        want = brute_force_max_clique(g).size
        if got != want:
            bad.append((k, n, p, got, want))
    assert report(1, not bad, f"solver == oracle on {200 - len(bad)}/200 graphs"), bad


def test_2_seed_inliers_are_bounded_cliques(report):
    eps = 0.1
    checks = violations = 0
    for scene_seed in range(100):
        c, gt = generate_scene(SceneSpec(num_inliers=21, num_outliers=45, num_classes=3, rng_seed=scene_seed))
        s = prune_semantic(c)
        subs = build_class_subgraphs(s, eps)
        omega = {}
        for g in subs:
            assert len(g) <= 25, "oracle cap"
            omega[g.class_label] = brute_force_max_clique(g).size
        rng = np.random.default_rng(10_000 + scene_seed)
        for k in range(100):
            if k % 2:
                T = random_transform(rng)
            else:
                # small perturbations of the truth give large, nontrivial seed sets
                d = random_transform(rng, max_angle_deg=float(rng.uniform(0, 2)), max_translation=0.1)
                T = d.compose(gt.transform)
            for g in subs:
                pos = {int(p): v for v, p in enumerate(g.vertex_map)}
                seed = [pos[int(p)] for p in compute_seed_inliers(T, s, g.vertex_map, eps)]
                checks += 1
                if not is_clique(g, seed) or len(seed) > omega[g.class_label]:
                    violations += 1
    assert report(2, violations == 0, f"{violations} violations over {checks} seed sets"), violations


def test_3_registration_accuracy(report):
    good = 0
    for seed in range(100):
        c, gt = generate_scene(SceneSpec(num_inliers=60, num_outliers=240, num_classes=3,
                                         noise_sigma=0.01, epsilon=0.1, rng_seed=seed))
        ang, tr = transform_errors(run_hsmc(c, PipelineConfig(epsilon=0.1)).transform, gt.transform)
        good += ang < 1.0 and tr < 0.1
    assert report(3, good >= 95, f"{good}/100 seeds within 1 deg / 0.1 m (need 95)"), good


def test_4_label_noise_robustness(report):
    rates = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7]
    counts = {}
    for rate in rates + [0.9]:
        ok = 0
        for seed in range(100):
            c, gt = generate_scene(SceneSpec(label_noise_rate=rate, rng_seed=seed))
            try:
                res = run_hsmc(c)
            except Exception:  # failure is allowed at 0.9 and counts as a miss elsewhere
                continue
            ok += angular_error(res.transform.rotation, gt.transform.rotation) < 1.0
        counts[rate] = ok
    passed = all(counts[r] >= 90 for r in rates)
    detail = " ".join(f"{r:.1f}:{counts[r]}" for r in rates) + f" (0.9:{counts[0.9]}, not asserted)"
    assert report(4, passed, detail), counts


def _best_of(fn, c, repeats=3):
    best, result = math.inf, None
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = fn(c)
        best = min(best, time.perf_counter() - t0)
    return result, best


def test_5_hierarchy_advantage(report):
    fewer = 0
    t_h, t_f = [], []
    for seed in range(100):
        c, _ = generate_scene(SceneSpec(num_inliers=100, num_outliers=400, num_classes=5, rng_seed=seed))
        # alternate which method runs first so cache warm-up does not favour either
        if seed % 2:
            (h, th), (f, tf) = _best_of(run_hsmc, c), _best_of(run_flat, c)
        else:
            (f, tf), (h, th) = _best_of(run_flat, c), _best_of(run_hsmc, c)
        fewer += h.total_nodes < f.total_nodes
        t_h.append(th)
        t_f.append(tf)
    med_h, med_f = statistics.median(t_h), statistics.median(t_f)
    ok = fewer >= 90 and med_h < med_f
    detail = f"nodes lower on {fewer}/100 (need 90); median time hsmc {med_h * 1e3:.2f} ms vs flat {med_f * 1e3:.2f} ms"
    assert report(5, ok, detail), (fewer, med_h, med_f)


def test_6_error_metric_fidelity(report):
    worst = 0.0
    for deg in (1.0, 30.0, 90.0, 179.0):
        for axis in ([0, 0, 1], [1, 0, 0], [1, -2, 0.5]):
            R = rotation_from_axis_angle(axis, math.radians(deg))
            worst = max(worst, abs(angular_error(R, np.eye(3)) - deg))
    assert report(6, worst <= 1e-6, f"max |error - theta| = {worst:.2e} deg"), worst


def test_7_two_motion_rejection(report):
    clean = 0
    for seed in range(50):
        rng = np.random.default_rng(500 + seed)
        direction = rng.normal(size=3)
        offset = direction / np.linalg.norm(direction) * rng.uniform(5.0, 10.0)
        c, gt = generate_two_motion_scene(SceneSpec(rng_seed=seed), int(rng.integers(1, 4)), displaced(offset))
        res = run_hsmc(c)
        clean += not np.intersect1d(res.final_inliers, gt.moving_indices).size
    assert report(7, clean >= 48, f"{clean}/50 seeds with no moving-class pairs (need 48)"), clean


def test_8_io_bit_exactness(report, tmp_path):
    failures = []
    # velodyne record: x, y, z, intensity as little-endian float32
    (tmp_path / "p.bin").write_bytes(struct.pack("<8f", 1.0, 2.0, 3.0, 0.5, -4.25, 0.0, 1e-3, 7.0))
    pts = read_point_cloud_bin(tmp_path / "p.bin").points
    if pts.tolist() != [[1.0, 2.0, 3.0], [-4.25, 0.0, float(np.float32(1e-3))]]:
        failures.append("bin")
    # instance id in the upper half must be masked off
    (tmp_path / "l.label").write_bytes(struct.pack("<3I", 0x00010028, 0xABCD0000, 0x0000FFFF))
    if read_label_file(tmp_path / "l.label", 3).tolist() != [40, 0, 0xFFFF]:
        failures.append("label")
    rng = np.random.default_rng(0)
    cloud = PointCloud(rng.normal(size=(150, 3)))
    pairs = np.stack([rng.permutation(150)[:100], rng.permutation(150)[:100]], axis=1)
    write_correspondences_csv(pairs, tmp_path / "c.csv")
    if not np.array_equal(read_correspondences_csv(tmp_path / "c.csv", cloud, cloud).pairs, pairs):
        failures.append("csv")
    T = random_transform(rng)
    write_result(RegistrationResult(T, np.arange(5), [], 5), None, tmp_path / "r.json")
    rec = read_result(tmp_path / "r.json")
    if not (np.array_equal(rec.rotation, T.rotation) and np.array_equal(rec.translation, T.translation)):
        failures.append("result")
    if rec.angular_error_deg is not None:
        failures.append("result-absent-errors")
    assert report(8, not failures, "all golden/round-trip checks exact" if not failures else str(failures)), failures
