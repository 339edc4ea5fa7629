"""Semantic-assisted hierarchical maximum-clique outlier removal for 3D registration."""

__version__ = "0.1.0"

from .clique import Clique, SolveReport, brute_force_max_clique, greedy_color_bound, is_clique, solve_max_clique
from .corr import CorrespondenceSet, PointCloud, count_consensus, group_by_label, prune_semantic, residual
from .geom import RigidTransform, angular_error, estimate_rigid_svd, translation_error
from .graph import ConsistencyGraph, build_class_subgraphs, build_consistency_graph, pair_distance
from .pipeline import PipelineConfig, RegistrationResult, run_flat, run_hsmc
from .ransac import RansacConfig, ransac_rigid
from .synth import SceneSpec, generate_scene, generate_two_motion_scene, inject_label_noise

__all__ = [
    "Clique",
    "ConsistencyGraph",
    "CorrespondenceSet",
    "PipelineConfig",
    "PointCloud",
    "RansacConfig",
    "RegistrationResult",
    "RigidTransform",
    "SceneSpec",
    "SolveReport",
    "angular_error",
    "brute_force_max_clique",
    "build_class_subgraphs",
    "build_consistency_graph",
    "count_consensus",
    "estimate_rigid_svd",
    "generate_scene",
    "generate_two_motion_scene",
    "greedy_color_bound",
    "group_by_label",
    "inject_label_noise",
    "is_clique",
    "pair_distance",
    "prune_semantic",
    "ransac_rigid",
    "residual",
    "run_flat",
    "run_hsmc",
    "solve_max_clique",
    "translation_error",
]
