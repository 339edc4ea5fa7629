"""Semantic-assisted hierarchical maximum-clique registration.

``run_hsmc`` prunes label-inconsistent correspondences, solves a maximum
clique per semantic class (each seeded with the inliers of the transform
estimated from the classes already solved), merges the per-class cliques,
re-solves on the merged set to drop cross-class inconsistencies, and fits the
final transform with RANSAC. ``run_flat`` is the single-graph baseline.
"""
from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass, field
from enum import Enum

import numpy as np

from .clique import SolveReport, solve_max_clique
from .corr import CorrespondenceSet, count_consensus, inlier_set, prune_semantic
from .errors import NoSolution, NoValidSample, TooFewPairs
from .geom import RigidTransform
from .graph import DEFAULT_VERTEX_CAP, ConsistencyGraph, build_class_subgraphs, build_consistency_graph
from .ransac import RansacConfig, ransac_rigid

log = logging.getLogger(__name__)

MIN_SOLVE_VERTICES = 3


class ClassOrder(str, Enum):
    DESCENDING_SIZE = "descending_size"
    STATIC_PRIORITY_THEN_SIZE = "static_priority_then_size"


@dataclass(frozen=True)
class PipelineConfig:
    epsilon: float = 0.1
    threshold_factor: float = 2.0
    class_order_policy: ClassOrder = ClassOrder.DESCENDING_SIZE
    static_priority: tuple[int, ...] = ()
    ransac: RansacConfig = field(default_factory=RansacConfig)
    node_budget_per_class: int | None = None
    drop_unlabeled: bool = False
    vertex_cap: int = DEFAULT_VERTEX_CAP

    def __post_init__(self):
        if not self.epsilon > 0 or not self.threshold_factor > 0:
            raise ValueError("epsilon and threshold_factor must be positive")
        object.__setattr__(self, "class_order_policy", ClassOrder(self.class_order_policy))
        object.__setattr__(self, "static_priority", tuple(int(x) for x in self.static_priority))
        if self.ransac.epsilon != self.epsilon:
            object.__setattr__(self, "ransac", RansacConfig(
                self.epsilon, self.ransac.max_iterations, self.ransac.confidence, self.ransac.rng_seed
            ))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["class_order_policy"] = self.class_order_policy.value
        d["static_priority"] = list(self.static_priority)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> PipelineConfig:
        d = dict(d)
        if "ransac" in d and isinstance(d["ransac"], dict):
            d["ransac"] = RansacConfig(**d["ransac"])
        return cls(**d)


@dataclass
class ClassStage:
    class_id: int
    vertices: int
    edges: int
    clique_size: int
    seed_lb: int
    nodes_expanded: int
    exact: bool
    solved: bool
    seeded_from: tuple[int, ...] = ()


@dataclass(eq=False)
class RegistrationResult:
    transform: RigidTransform
    final_inliers: np.ndarray
    per_class: list[ClassStage]
    combined_clique_size: int
    combined_size: int = 0
    final_stage_nodes: int = 0
    final_stage_exact: bool = True
    method: str = "hsmc"
    pruned_count: int = 0
    input_count: int = 0
    timings: dict[str, float] = field(default_factory=dict)

    @property
    def total_nodes(self) -> int:
        """BnB nodes expanded over every solve of the run."""
        return sum(s.nodes_expanded for s in self.per_class) + self.final_stage_nodes


def compute_seed_inliers(
    T: RigidTransform, c: CorrespondenceSet, class_indices, epsilon: float
) -> np.ndarray:
    """Pairs among ``class_indices`` whose residual under ``T`` is ``<= epsilon``.

    Any two of them are within ``2 * epsilon`` of each other in pair distance,
    so the result is a clique of the class graph and its size a valid lower
    bound on that graph's maximum clique.
    """
    _, inliers = count_consensus(T, c, epsilon, class_indices)
    return inliers


def order_classes(subgraphs: list[ConsistencyGraph], cfg: PipelineConfig) -> list[int]:
    """Processing order as positions into ``subgraphs``."""
    by_size = sorted(range(len(subgraphs)), key=lambda k: (-len(subgraphs[k]), subgraphs[k].class_label))
    if cfg.class_order_policy is ClassOrder.DESCENDING_SIZE:
        return by_size
    pos = {g.class_label: k for k, g in enumerate(subgraphs)}
    first = [pos[label] for label in dict.fromkeys(cfg.static_priority) if label in pos]
    return first + [k for k in by_size if k not in first]


def _vertex_positions(g: ConsistencyGraph, pair_indices) -> list[int]:
    lookup = {int(p): v for v, p in enumerate(g.vertex_map)}
    return [lookup[int(p)] for p in pair_indices if int(p) in lookup]


def _refresh(c: CorrespondenceSet, union, cfg: PipelineConfig, salt: int) -> RigidTransform | None:
    ransac_cfg = RansacConfig(cfg.epsilon, cfg.ransac.max_iterations, cfg.ransac.confidence,
                              (cfg.ransac.rng_seed + salt) % (1 << 64))
    try:
        T, _ = ransac_rigid(c, union, ransac_cfg)
    except (NoValidSample, TooFewPairs):
        return None
    return T


def _final_stage(
    s: CorrespondenceSet,
    J: np.ndarray,
    seeds: list[np.ndarray],
    cfg: PipelineConfig,
) -> tuple[np.ndarray, SolveReport, float]:
    t0 = time.perf_counter()
    sub = s.subset(J)
    g = build_consistency_graph(sub, cfg.epsilon, cfg.threshold_factor, cfg.vertex_cap)
    pos = {int(p): k for k, p in enumerate(J)}
    best_seed: list[int] = []
    for seed in seeds:
        cand = [pos[int(p)] for p in seed if int(p) in pos]
        if len(cand) > len(best_seed):
            best_seed = cand
    report = solve_max_clique(g, best_seed or None)
    clique = J[list(report.best_clique.vertices)]
    return inlier_set(clique), report, time.perf_counter() - t0


def _finish(s: CorrespondenceSet, clique: np.ndarray, cfg: PipelineConfig) -> tuple[RigidTransform, np.ndarray]:
    if len(clique) < 3:
        raise NoSolution(f"final clique has {len(clique)} members, need at least 3")
    try:
        T, inliers = ransac_rigid(s, clique, cfg.ransac)
    except (NoValidSample, TooFewPairs) as exc:
        raise NoSolution(str(exc)) from exc
    return T, inliers


def run_hsmc(c: CorrespondenceSet, cfg: PipelineConfig = PipelineConfig()) -> RegistrationResult:
    """Hierarchical semantic maximum-clique registration of ``c``.

    Falls back to ``run_flat`` (with a warning) when the clouds carry no labels.
    """
    if not c.has_labels:
        log.warning("correspondences carry no semantic labels; falling back to a flat solve")
        return run_flat(c, cfg)
    timings: dict[str, float] = {}
    t_start = time.perf_counter()

    t0 = time.perf_counter()
    s = prune_semantic(c, cfg.drop_unlabeled)
    timings["prune"] = time.perf_counter() - t0
    if len(s) < 3:
        raise NoSolution(f"only {len(s)} correspondences survive semantic pruning")

    t0 = time.perf_counter()
    subgraphs = build_class_subgraphs(s, cfg.epsilon, cfg.threshold_factor, cfg.vertex_cap)
    timings["build_subgraphs"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    order = order_classes(subgraphs, cfg)
    T: RigidTransform | None = None
    union = np.zeros(0, dtype=np.int64)
    cliques: list[np.ndarray] = []
    stages: list[ClassStage] = []
    processed: list[int] = []
    for step, k in enumerate(order):
        g = subgraphs[k]
        if len(g) < MIN_SOLVE_VERTICES:
            members = inlier_set(g.vertex_map)
            stages.append(ClassStage(g.class_label, len(g), g.edge_count(), len(members), 0, 0, True, False,
                                     tuple(processed)))
        else:
            seed = None
            if T is not None:
                seed = _vertex_positions(g, compute_seed_inliers(T, s, g.vertex_map, cfg.epsilon))
            report = solve_max_clique(g, seed, cfg.node_budget_per_class)
            members = inlier_set(g.vertex_map[list(report.best_clique.vertices)])
            stages.append(ClassStage(g.class_label, len(g), g.edge_count(), report.best_clique.size,
                                     report.seed_size, report.nodes_expanded, report.exact, True,
                                     tuple(processed)))
            cliques.append(members)
        processed.append(g.class_label)
        grown = np.union1d(union, members)
        if len(grown) > 3 and len(grown) > len(union):
            fresh = _refresh(s, grown, cfg, salt=step + 1)
            if fresh is not None:
                T = fresh
        union = grown
    timings["class_solves"] = time.perf_counter() - t0

    seeds = sorted(cliques, key=len, reverse=True)[:1]
    if T is not None:
        seeds.append(compute_seed_inliers(T, s, union, cfg.epsilon))
    final_clique, report, dt = _final_stage(s, union, seeds, cfg)
    timings["final_clique"] = dt

    t0 = time.perf_counter()
    T_final, inliers = _finish(s, final_clique, cfg)
    timings["final_ransac"] = time.perf_counter() - t0
    timings["total"] = time.perf_counter() - t_start

    return RegistrationResult(
        transform=T_final,
        final_inliers=inlier_set(s.origin[inliers]),
        per_class=stages,
        combined_clique_size=len(final_clique),
        combined_size=len(union),
        final_stage_nodes=report.nodes_expanded,
        final_stage_exact=report.exact,
        method="hsmc",
        pruned_count=len(s),
        input_count=len(c),
        timings=timings,
    )


def run_flat(c: CorrespondenceSet, cfg: PipelineConfig = PipelineConfig()) -> RegistrationResult:
    """Baseline: one consistency graph over the pruned set, one solve, one RANSAC."""
    timings: dict[str, float] = {}
    t_start = time.perf_counter()
    t0 = time.perf_counter()
    s = prune_semantic(c, cfg.drop_unlabeled) if c.has_labels else c
    timings["prune"] = time.perf_counter() - t0
    if len(s) < 3:
        raise NoSolution(f"only {len(s)} correspondences available")

    t0 = time.perf_counter()
    g = build_consistency_graph(s, cfg.epsilon, cfg.threshold_factor, cfg.vertex_cap)
    timings["build_graph"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    report = solve_max_clique(g, None, cfg.node_budget_per_class)
    clique = inlier_set(list(report.best_clique.vertices))
    timings["final_clique"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    T, inliers = _finish(s, clique, cfg)
    timings["final_ransac"] = time.perf_counter() - t0
    timings["total"] = time.perf_counter() - t_start

    return RegistrationResult(
        transform=T,
        final_inliers=inlier_set(s.origin[inliers]),
        per_class=[],
        combined_clique_size=len(clique),
        combined_size=len(s),
        final_stage_nodes=report.nodes_expanded,
        final_stage_exact=report.exact,
        method="flat",
        pruned_count=len(s),
        input_count=len(c),
        timings=timings,
    )


def summarize(result: RegistrationResult) -> dict:
    """Plain-data view of the per-stage diagnostics."""
    return {
        "method": result.method,
        "input_count": result.input_count,
        "pruned_count": result.pruned_count,
        "combined_size": result.combined_size,
        "combined_clique_size": result.combined_clique_size,
        "final_inlier_count": int(len(result.final_inliers)),
        "final_stage_nodes": result.final_stage_nodes,
        "final_stage_exact": result.final_stage_exact,
        "total_nodes": result.total_nodes,
        "per_class": [
            {**asdict(st), "seeded_from": list(st.seeded_from)} for st in result.per_class
        ],
        "timings": dict(result.timings),
    }
