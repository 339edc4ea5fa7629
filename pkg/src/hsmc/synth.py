"""Semi-synthetic registration scenes with known ground truth.

A scene is a set of putative correspondences between a source cloud and a
randomly transformed, noisy copy of it. Planted inliers follow the ground
truth motion; planted outliers point at random locations whose residual under
the ground truth exceeds ``2 * epsilon``. Every correspondence carries a
semantic class; outlier targets get an independent random class, the way
semantics-agnostic feature matching would pair points.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .corr import CorrespondenceSet, PointCloud, inlier_set
from .errors import InfeasibleSpec, MissingLabels
from .geom import RigidTransform, random_transform

# heavier benchmark noise level: per-axis variance 0.01, i.e. sigma = 0.1 m
HIGH_NOISE_SIGMA = 0.1
MAX_OUTLIER_RESAMPLES = 100


@dataclass(frozen=True)
class SceneSpec:
    num_inliers: int = 60
    num_outliers: int = 240
    num_classes: int = 3
    noise_sigma: float = 0.01
    rotation_range: float = 180.0
    translation_range: float = 10.0
    workspace_extent: float = 20.0
    label_noise_rate: float = 0.0
    rng_seed: int = 0
    epsilon: float = 0.1
    overlap_removal_rate: float = 0.0
    class_weights: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.num_inliers < 3:
            raise ValueError("num_inliers must be at least 3")
        if self.num_outliers < 0:
            raise ValueError("num_outliers must be nonnegative")
        if self.num_classes < 1:
            raise ValueError("num_classes must be at least 1")
        if not 0 <= self.label_noise_rate <= 1:
            raise ValueError("label_noise_rate must lie in [0, 1]")
        if not 0 <= self.overlap_removal_rate < 1:
            raise ValueError("overlap_removal_rate must lie in [0, 1)")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be nonnegative")
        if self.workspace_extent <= 0 or self.epsilon <= 0:
            raise ValueError("workspace_extent and epsilon must be positive")
        if self.class_weights is not None:
            w = self.class_weights
            if len(w) != self.num_classes or min(w) < 0 or sum(w) <= 0:
                raise ValueError("class_weights needs one nonnegative weight per class")
            object.__setattr__(self, "class_weights", tuple(float(x) for x in w))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["class_weights"] = None if self.class_weights is None else list(self.class_weights)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> SceneSpec:
        d = dict(d)
        if d.get("class_weights") is not None:
            d["class_weights"] = tuple(d["class_weights"])
        return cls(**d)


@dataclass(frozen=True, eq=False)
class GroundTruth:
    transform: RigidTransform
    inlier_indices: np.ndarray
    source_labels: np.ndarray
    target_labels: np.ndarray
    moving_indices: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    moving_transform: RigidTransform | None = None


def _classes(rng: np.random.Generator, count: int, spec: SceneSpec) -> np.ndarray:
    L = spec.num_classes
    if spec.class_weights is None:
        return 1 + np.arange(count, dtype=np.int64) % L
    p = np.asarray(spec.class_weights) / sum(spec.class_weights)
    return 1 + rng.choice(L, size=count, p=p).astype(np.int64)


def _bounded_noise(rng: np.random.Generator, count: int, sigma: float, bound: float) -> np.ndarray:
    """Per-axis Gaussian noise, redrawing the (rare) vectors longer than ``bound``."""
    if sigma <= 0:
        return np.zeros((count, 3))
    noise = rng.normal(0.0, sigma, size=(count, 3))
    while True:
        bad = np.flatnonzero(np.sqrt(np.sum(noise * noise, axis=1)) > bound)
        if not len(bad):
            return noise
        noise[bad] = rng.normal(0.0, sigma, size=(len(bad), 3))


def _generate(
    spec: SceneSpec,
    moving_class: int | None = None,
    secondary: RigidTransform | Callable[[RigidTransform], RigidTransform] | None = None,
) -> tuple[CorrespondenceSet, GroundTruth]:
    rng = np.random.Generator(np.random.Philox(spec.rng_seed))
    T = random_transform(rng, spec.rotation_range, spec.translation_range)
    if callable(secondary):
        secondary = secondary(T)
    half = spec.workspace_extent / 2.0
    ni, no = spec.num_inliers, spec.num_outliers
    n = ni + no

    src = rng.uniform(-half, half, size=(n, 3))
    cls = np.concatenate([_classes(rng, ni, spec), _classes(rng, no, spec)])

    moving = np.zeros(n, dtype=bool)
    if moving_class is not None and secondary is not None:
        moving[:ni] = cls[:ni] == moving_class
    dst = np.empty_like(src)
    noise = _bounded_noise(rng, ni, spec.noise_sigma, 3.0 * spec.noise_sigma + spec.epsilon)
    dst[:ni] = T.apply(src[:ni]) + noise
    if moving.any():
        dst[:ni][moving[:ni]] = secondary.apply(src[:ni][moving[:ni]]) + noise[moving[:ni]]

    min_res = 2.0 * spec.epsilon
    expected = T.apply(src[ni:])
    for k in range(no):
        for _ in range(MAX_OUTLIER_RESAMPLES):
            q = T.apply(rng.uniform(-half, half, size=3))
            if np.linalg.norm(q - expected[k]) > min_res:
                dst[ni + k] = q
                break
        else:
            raise InfeasibleSpec("workspace too small to place outliers beyond 2*epsilon")

    dst_cls = cls.copy()
    dst_cls[ni:] = rng.integers(1, spec.num_classes + 1, size=no)

    # shuffle correspondence order, and the target cloud order independently
    perm = rng.permutation(n)
    tperm = rng.permutation(n)
    src, cls, moving = src[perm], cls[perm], moving[perm]
    dst_c, dst_cls_c = dst[perm], dst_cls[perm]
    planted = perm < ni

    target_pts = np.empty_like(dst_c)
    target_lbl = np.empty_like(dst_cls_c)
    target_pts[tperm] = dst_c
    target_lbl[tperm] = dst_cls_c
    pairs = np.column_stack([np.arange(n), tperm])

    keep = np.ones(n, dtype=bool)
    if spec.overlap_removal_rate > 0:
        removed = rng.choice(n, size=int(round(spec.overlap_removal_rate * n)), replace=False)
        gone = np.zeros(n, dtype=bool)
        gone[removed] = True
        remap = np.cumsum(~gone) - 1
        keep = ~gone[pairs[:, 1]]
        target_pts, target_lbl = target_pts[~gone], target_lbl[~gone]
        pairs = pairs[keep]
        pairs[:, 1] = remap[pairs[:, 1]]

    source = PointCloud(src, cls)
    target = PointCloud(target_pts, target_lbl)
    c = CorrespondenceSet(source, target, pairs)
    planted, moving = planted[keep], moving[keep]
    gt = GroundTruth(
        transform=T,
        inlier_indices=inlier_set(np.flatnonzero(planted & ~moving)),
        source_labels=source.labels,
        target_labels=target.labels,
        moving_indices=inlier_set(np.flatnonzero(moving)),
        moving_transform=secondary if moving.any() else None,
    )
    if spec.label_noise_rate > 0:
        c = inject_label_noise(c, spec.label_noise_rate, spec.num_classes, _noise_seed(spec.rng_seed))
    return c, gt


def _noise_seed(seed: int) -> int:
    return (seed * 0x9E3779B97F4A7C15 + 0x632BE59BD9B4E019) % (1 << 64)


def generate_scene(spec: SceneSpec) -> tuple[CorrespondenceSet, GroundTruth]:
    """Scene with a single rigid motion; fully determined by ``spec.rng_seed``."""
    return _generate(spec)


def generate_two_motion_scene(
    spec: SceneSpec,
    moving_class: int,
    secondary_transform: RigidTransform | Callable[[RigidTransform], RigidTransform],
) -> tuple[CorrespondenceSet, GroundTruth]:
    """Like ``generate_scene`` but inliers of ``moving_class`` follow another motion.

    ``secondary_transform`` is either a transform or a function of the drawn
    ground-truth transform (handy for "ground truth shifted by 5 m").
    The ground-truth inlier set lists dominant-motion inliers only; the moving
    ones are reported in ``moving_indices``.
    """
    if spec.num_classes < 2:
        raise ValueError("a two-motion scene needs at least 2 classes")
    if not 1 <= moving_class <= spec.num_classes:
        raise ValueError("moving_class must be a class id in 1..num_classes")
    c, gt = _generate(spec, moving_class, secondary_transform)
    if gt.moving_transform is not None and gt.moving_transform == gt.transform:
        merged = inlier_set(np.concatenate([gt.inlier_indices, gt.moving_indices]))
        gt = GroundTruth(gt.transform, merged, gt.source_labels, gt.target_labels)
    return c, gt


def displaced(offset) -> Callable[[RigidTransform], RigidTransform]:
    """Secondary motion equal to the ground truth followed by a translation ``offset``."""
    offset = np.asarray(offset, dtype=np.float64)
    return lambda T: RigidTransform(T.rotation, T.translation + offset)


def inject_label_noise(c: CorrespondenceSet, rate: float, num_classes: int, seed: int) -> CorrespondenceSet:
    """Reassign ``round(rate * N)`` target-cloud labels to a different random class."""
    if not 0 <= rate <= 1:
        raise ValueError("rate must lie in [0, 1]")
    if c.target.labels is None:
        raise MissingLabels("target cloud has no labels")
    labels = np.array(c.target.labels, dtype=np.int64)
    count = int(round(rate * len(labels)))
    if count == 0:
        return c
    if num_classes < 2:
        raise ValueError("label noise needs at least 2 classes")
    rng = np.random.Generator(np.random.Philox(seed))
    chosen = rng.choice(len(labels), size=count, replace=False)
    old = labels[chosen]
    in_range = (old >= 1) & (old <= num_classes)
    shift = rng.integers(1, num_classes, size=count)
    fresh = rng.integers(1, num_classes + 1, size=count)
    labels[chosen] = np.where(in_range, 1 + (old - 1 + shift) % num_classes, fresh)
    return c.with_target_labels(labels)
