"""Command-line front end: ``hsmc {synth,register,bench,oracle-check}``.

Exit codes: 0 success, 1 algorithmic failure, 2 usage or file error.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

from . import __version__
from .bench import BenchGrid, format_table, run_grid, run_oracle_check
from .errors import HsmcError, InfeasibleSpec, NoSolution
from .geom import transform_errors
from .io import read_correspondences_csv, read_label_file, read_point_cloud_bin, read_scene, write_result, write_scene
from .io import read_ground_truth
from .pipeline import PipelineConfig, run_flat, run_hsmc
from .ransac import RansacConfig
from .synth import SceneSpec, generate_scene

CONFIG_ENV = "HSMC_CONFIG"
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

class UsageError(Exception):
    pass


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hsmc", description="Semantic hierarchical max-clique registration")
    parser.add_argument("--version", action="version", version=f"hsmc {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a semi-synthetic scene archive")
    p.add_argument("--inliers", type=int, default=60)
    p.add_argument("--outliers", type=int, default=240)
    p.add_argument("--classes", type=int, default=3)
    p.add_argument("--sigma", type=float, default=0.01, help="per-axis Gaussian noise (m)")
    p.add_argument("--label-noise", type=float, default=0.0)
    p.add_argument("--overlap-removal", type=float, default=0.0)
    p.add_argument("--rotation-range", type=float, default=180.0, help="degrees")
    p.add_argument("--translation-range", type=float, default=10.0, help="meters")
    p.add_argument("--extent", type=float, default=20.0, help="workspace cube edge (m)")
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("register", help="register a scene")
    p.add_argument("scene", nargs="?", help="scene archive directory")
    p.add_argument("--source")
    p.add_argument("--target")
    p.add_argument("--source-labels")
    p.add_argument("--target-labels")
    p.add_argument("--correspondences")
    p.add_argument("--ground-truth")
    p.add_argument("--config", help=f"JSON pipeline config (default: ${CONFIG_ENV})")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--factor", type=float)
    p.add_argument("--order", choices=["size", "priority"])
    p.add_argument("--priority-list", type=_ints)
    p.add_argument("--seed", type=int)
    p.add_argument("--budget", type=int)
    p.add_argument("--flat", action="store_true")
    p.add_argument("--out")

    p = sub.add_parser("bench", help="sweep outlier ratio and label noise, hsmc vs flat")
    p.add_argument("--correspondences", type=int, default=300)
    p.add_argument("--outlier-ratios", type=_floats, default=(0.8,))
    p.add_argument("--label-noise", type=_floats, default=(0.0,))
    p.add_argument("--classes", type=int, default=3)
    p.add_argument("--sigma", type=float, default=0.01)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--base-seed", type=int, default=0)
    p.add_argument("--methods", default="hsmc,flat")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", help="write the machine-readable report (JSON) here")

    p = sub.add_parser("oracle-check", help="solver vs brute-force oracle on random graphs")
    p.add_argument("--graphs", type=int, default=200)
    p.add_argument("--n", type=int, help="fixed vertex count (overrides --min-n/--max-n)")
    p.add_argument("--min-n", type=int, default=5)
    p.add_argument("--max-n", type=int, default=25)
    p.add_argument("--p", type=_floats, default=(0.3, 0.5, 0.8))
    p.add_argument("--seed", type=int, default=0)
    return parser


def cmd_synth(args) -> int:
    try:
        spec = SceneSpec(
            num_inliers=args.inliers,
            num_outliers=args.outliers,
            num_classes=args.classes,
            noise_sigma=args.sigma,
            rotation_range=args.rotation_range,
            translation_range=args.translation_range,
            workspace_extent=args.extent,
            label_noise_rate=args.label_noise,
            overlap_removal_rate=args.overlap_removal,
            epsilon=args.epsilon,
            rng_seed=args.seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    try:
        c, gt = generate_scene(spec)
    except InfeasibleSpec as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    out = write_scene(args.out, c, gt, spec)
    print(f"wrote scene to {out} ({len(c)} correspondences, {len(gt.inlier_indices)} inliers)")
    return EXIT_OK


def load_config(args) -> PipelineConfig:
    """Flags override the config file, which overrides built-in defaults."""
    base: dict = {}
    path = args.config or os.environ.get(CONFIG_ENV)
    if path:
        try:
            base = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(base, dict):
            raise UsageError(f"config {path} must hold a JSON object")
        base = dict(base.get("config", base))
    ransac = dict(base.get("ransac") or {})
    if args.epsilon is not None:
        base["epsilon"] = args.epsilon
    if args.factor is not None:
        base["threshold_factor"] = args.factor
    if args.order is not None:
        base["class_order_policy"] = "descending_size" if args.order == "size" else "static_priority_then_size"
    if args.priority_list is not None:
        base["static_priority"] = list(args.priority_list)
    if args.budget is not None:
        base["node_budget_per_class"] = args.budget
    if args.seed is not None:
        ransac["rng_seed"] = args.seed
    ransac["epsilon"] = base.get("epsilon", PipelineConfig.epsilon)
    try:
        base["ransac"] = RansacConfig(**ransac)
        return PipelineConfig.from_dict(base)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid configuration: {exc}") from exc


def _load_inputs(args):
    if args.scene:
        c, gt, _ = read_scene(args.scene)
    else:
        if not (args.source and args.target and args.correspondences):
            raise UsageError("give a scene directory or --source, --target and --correspondences")
        source = read_point_cloud_bin(args.source)
        target = read_point_cloud_bin(args.target)
        if args.source_labels:
            source = source.with_labels(read_label_file(args.source_labels, len(source)))
        if args.target_labels:
            target = target.with_labels(read_label_file(args.target_labels, len(target)))
        c = read_correspondences_csv(args.correspondences, source, target)
        gt = None
    if args.ground_truth:
        gt = read_ground_truth(args.ground_truth)
    return c, gt


def cmd_register(args) -> int:
    cfg = load_config(args)
    try:
        c, gt = _load_inputs(args)
    except (OSError, HsmcError) as exc:
        raise UsageError(str(exc)) from exc
    if not args.flat and not c.has_labels:
        print("warning: no semantic labels; falling back to a flat solve", file=sys.stderr)
    t0 = time.perf_counter()
    try:
        result = (run_flat if args.flat else run_hsmc)(c, cfg)
    except NoSolution as exc:
        print(f"no solution: {exc}", file=sys.stderr)
        return EXIT_FAIL
    wall = time.perf_counter() - t0

    sizes = ",".join(str(s.clique_size) for s in result.per_class) or "-"
    line = (f"method={result.method} pruned={result.pruned_count}/{result.input_count} "
            f"class_cliques={sizes} final_clique={result.combined_clique_size} "
            f"inliers={len(result.final_inliers)} nodes={result.total_nodes}")
    if gt is not None:
        ang, tr = transform_errors(result.transform, gt.transform)
        line += f" ang_err_deg={ang:.6f} trans_err_m={tr:.6f}"
    line += f" time_s={wall:.6f}"
    print(line)
    if args.out:
        write_result(result, gt, args.out, cfg)
    return EXIT_OK


def cmd_bench(args) -> int:
    methods = tuple(m.strip() for m in args.methods.split(",") if m.strip())
    if not methods or any(m not in ("hsmc", "flat") for m in methods):
        raise UsageError("--methods takes a comma-separated subset of hsmc,flat")
    if args.seeds < 1 or args.workers < 1 or args.correspondences < 3:
        raise UsageError("--seeds, --workers must be >= 1 and --correspondences >= 3")
    grid = BenchGrid(
        correspondences=args.correspondences,
        outlier_ratios=args.outlier_ratios,
        label_noise=args.label_noise,
        seeds=args.seeds,
        base_seed=args.base_seed,
        num_classes=args.classes,
        noise_sigma=args.sigma,
        methods=methods,
    )
    try:
        cfg = PipelineConfig(epsilon=args.epsilon)
        report = run_grid(grid, cfg, workers=args.workers)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    print(format_table(report))
    if args.out:
        Path(args.out).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    catastrophic = [c for c in report["cells"] if c["completed"] == 0]
    for c in catastrophic:
        print(f"cell failed: rho={c['outlier_ratio']:.2f} noise={c['label_noise']:.2f} method={c['method']}",
              file=sys.stderr)
    return EXIT_FAIL if catastrophic else EXIT_OK


def cmd_oracle_check(args, solver=None) -> int:
    lo, hi = (args.n, args.n) if args.n is not None else (args.min_n, args.max_n)
    if lo < 0 or hi < lo or hi > 30 or args.graphs < 1:
        raise UsageError("need 0 <= min-n <= max-n <= 30 and --graphs >= 1")
    if any(not 0 <= p <= 1 for p in args.p) or not args.p:
        raise UsageError("--p values must lie in [0, 1]")
    kwargs = {} if solver is None else {"solver": solver}
    bad = run_oracle_check(args.graphs, (lo, hi), args.p, args.seed, out=sys.stdout, **kwargs)
    print(f"oracle check: {args.graphs - len(bad)}/{args.graphs} graphs agree")
    return EXIT_FAIL if bad else EXIT_OK


COMMANDS = {"synth": cmd_synth, "register": cmd_register, "bench": cmd_bench, "oracle-check": cmd_oracle_check}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"hsmc {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
