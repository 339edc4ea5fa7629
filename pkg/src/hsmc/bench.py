"""Benchmark sweeps (hierarchical vs flat) and the solver-vs-oracle self-check."""
from __future__ import annotations

import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, TextIO

import numpy as np

from .clique import brute_force_max_clique, solve_max_clique
from .errors import HsmcError
from .geom import transform_errors
from .graph import random_graph
from .pipeline import PipelineConfig, run_flat, run_hsmc
from .synth import SceneSpec, generate_scene

METHODS = {"hsmc": run_hsmc, "flat": run_flat}
SUCCESS_ANGLE_DEG = 1.0


@dataclass(frozen=True)
class BenchGrid:
    correspondences: int = 300
    outlier_ratios: tuple[float, ...] = (0.8,)
    label_noise: tuple[float, ...] = (0.0,)
    seeds: int = 10
    base_seed: int = 0
    num_classes: int = 3
    noise_sigma: float = 0.01
    methods: tuple[str, ...] = ("hsmc", "flat")


def _split(total: int, ratio: float) -> tuple[int, int]:
    outliers = int(round(ratio * total))
    return total - outliers, outliers


def run_one(spec: SceneSpec, method: str, cfg: PipelineConfig) -> dict:
    """Single scene, single method; errors become a failed record."""
    c, gt = generate_scene(spec)
    rec = {"method": method, "seed": spec.rng_seed}
    t0 = time.perf_counter()
    try:
        res = METHODS[method](c, cfg)
    except HsmcError as exc:
        rec.update(ok=False, error=f"{type(exc).__name__}: {exc}", wall_time=time.perf_counter() - t0)
        return rec
    wall = time.perf_counter() - t0
    ang, tr = transform_errors(res.transform, gt.transform)
    rec.update(
        ok=True,
        angular_error_deg=ang,
        translation_error_m=tr,
        success=ang < SUCCESS_ANGLE_DEG,
        nodes=res.total_nodes,
        clique_size=res.combined_clique_size,
        inliers=int(len(res.final_inliers)),
        wall_time=wall,
    )
    return rec


def _stats(values) -> dict:
    vals = [float(v) for v in values]
    if not vals:
        return {"median": None, "mean": None, "std": None}
    return {
        "median": statistics.median(vals),
        "mean": statistics.fmean(vals),
        "std": statistics.pstdev(vals),
    }


def run_grid(grid: BenchGrid, cfg: PipelineConfig = PipelineConfig(), workers: int = 1) -> dict:
    """Run every (outlier ratio, label noise, seed, method) cell.

    Returns ``{"runs": [...], "cells": [...]}``; both lists are sorted by cell
    key so the report does not depend on worker scheduling.
    """
    jobs = []
    for ratio in grid.outlier_ratios:
        ni, no = _split(grid.correspondences, ratio)
        for noise in grid.label_noise:
            for k in range(grid.seeds):
                spec = SceneSpec(
                    num_inliers=ni,
                    num_outliers=no,
                    num_classes=grid.num_classes,
                    noise_sigma=grid.noise_sigma,
                    label_noise_rate=noise,
                    rng_seed=grid.base_seed + k,
                    epsilon=cfg.epsilon,
                )
                for method in grid.methods:
                    jobs.append(((ratio, noise, spec.rng_seed, method), spec, method))

    def work(job):
        key, spec, method = job
        rec = run_one(spec, method, cfg)
        rec.update(outlier_ratio=key[0], label_noise=key[1])
        return key, rec

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            done = list(pool.map(work, jobs))
    else:
        done = [work(j) for j in jobs]
    runs = [rec for _, rec in sorted(done, key=lambda kr: kr[0])]

    cells = []
    for ratio in grid.outlier_ratios:
        for noise in grid.label_noise:
            for method in grid.methods:
                rs = [r for r in runs if r["outlier_ratio"] == ratio and r["label_noise"] == noise
                      and r["method"] == method]
                good = [r for r in rs if r["ok"]]
                cells.append({
                    "outlier_ratio": ratio,
                    "label_noise": noise,
                    "method": method,
                    "runs": len(rs),
                    "completed": len(good),
                    "successes": sum(r["success"] for r in good),
                    "angular_error_deg": _stats(r["angular_error_deg"] for r in good),
                    "translation_error_m": _stats(r["translation_error_m"] for r in good),
                    "nodes": _stats(r["nodes"] for r in good),
                    "wall_time": _stats(r["wall_time"] for r in good),
                })
    return {"runs": runs, "cells": cells}


def deterministic_view(report: dict) -> dict:
    """Report with wall-clock fields removed, for reproducibility comparisons."""
    runs = [{k: v for k, v in r.items() if k != "wall_time"} for r in report["runs"]]
    cells = [{k: v for k, v in c.items() if k != "wall_time"} for c in report["cells"]]
    return {"runs": runs, "cells": cells}


def _fmt(x, digits=4) -> str:
    return "-" if x is None else f"{x:.{digits}f}"


def format_table(report: dict) -> str:
    header = (f"{'rho':>5} {'noise':>5} {'method':>6} {'ok':>7} {'succ':>5} "
              f"{'angErr med':>10} {'mean':>8} {'std':>8} {'trErr med':>9} "
              f"{'nodes med':>9} {'time med':>9}")
    lines = [header, "-" * len(header)]
    for c in report["cells"]:
        lines.append(
            f"{c['outlier_ratio']:>5.2f} {c['label_noise']:>5.2f} {c['method']:>6} "
            f"{c['completed']:>3}/{c['runs']:<3} {c['successes']:>5} "
            f"{_fmt(c['angular_error_deg']['median']):>10} {_fmt(c['angular_error_deg']['mean']):>8} "
            f"{_fmt(c['angular_error_deg']['std']):>8} {_fmt(c['translation_error_m']['median']):>9} "
            f"{_fmt(c['nodes']['median'], 1):>9} {_fmt(c['wall_time']['median'], 5):>9}"
        )
    return "\n".join(lines)


def run_oracle_check(
    graphs: int = 200,
    n_range: tuple[int, int] = (5, 25),
    probabilities: tuple[float, ...] = (0.3, 0.5, 0.8),
    seed: int = 0,
    solver: Callable = solve_max_clique,
    out: TextIO | None = None,
) -> list[dict]:
    """Compare ``solver`` against the brute-force oracle on random G(n, p) graphs.

    Returns the mismatches (empty when every size agrees); each mismatch is
    also printed to ``out`` as an edge list.
    """
    rng = np.random.Generator(np.random.Philox(seed))
    lo, hi = n_range
    mismatches = []
    for k in range(graphs):
        n = int(rng.integers(lo, hi + 1))
        p = float(probabilities[k % len(probabilities)])
        g = random_graph(rng, n, p)
        got = solver(g).best_clique.size
        want = brute_force_max_clique(g).size
        if got != want:
            mismatches.append({"index": k, "n": n, "p": p, "solver": got, "oracle": want, "edges": g.edges()})
            if out is not None:
                print(f"mismatch on graph {k}: n={n} p={p} solver={got} oracle={want}", file=out)
                for i, j in g.edges():
                    print(f"{i} {j}", file=out)
    return mismatches
