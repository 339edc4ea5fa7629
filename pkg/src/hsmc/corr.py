"""Correspondence data model, semantic pruning, residuals and consensus counting."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import IndexOutOfBounds, MissingLabels, NotPruned
from .geom import RigidTransform, as_points

UNLABELED = 0


@dataclass(frozen=True, eq=False)
class PointCloud:
    """Ordered ``(N, 3)`` points with optional per-point integer class labels."""

    points: np.ndarray
    labels: np.ndarray | None = None

    def __post_init__(self):
        pts = np.array(as_points(self.points))
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        if self.labels is not None:
            labels = np.array(self.labels, dtype=np.int64).reshape(-1)
            if len(labels) != len(pts):
                raise ValueError(f"{len(labels)} labels for {len(pts)} points")
            labels.setflags(write=False)
            object.__setattr__(self, "labels", labels)

    def __len__(self):
        return len(self.points)

    @property
    def has_labels(self) -> bool:
        return self.labels is not None

    def with_labels(self, labels) -> PointCloud:
        return PointCloud(self.points, labels)


def inlier_set(indices) -> np.ndarray:
    """Sorted, unique int64 index array; the package-wide InlierSet value."""
    arr = np.array(indices, dtype=np.int64).reshape(-1)
    if len(arr) < 2 or np.all(arr[1:] > arr[:-1]):
        return arr
    return np.unique(arr)


@dataclass(frozen=True, eq=False)
class CorrespondenceSet:
    """Putative matches ``(src_index, dst_index)`` between two clouds.

    ``origin`` maps each pair back to its position in the set it was derived
    from (the identity for freshly constructed sets), so subsets produced by
    pruning or slicing can still report indices into the original input.
    """

    source: PointCloud
    target: PointCloud
    pairs: np.ndarray
    origin: np.ndarray | None = field(default=None)

    def __post_init__(self):
        pairs = np.array(self.pairs, dtype=np.int64)
        if pairs.size == 0:
            pairs = pairs.reshape(0, 2)
        if pairs.ndim != 2 or pairs.shape[1] != 2:
            raise ValueError(f"pairs must have shape (K, 2), got {pairs.shape}")
        if len(pairs):
            if pairs[:, 0].min() < 0 or pairs[:, 0].max() >= len(self.source):
                raise IndexOutOfBounds("source index out of bounds")
            if pairs[:, 1].min() < 0 or pairs[:, 1].max() >= len(self.target):
                raise IndexOutOfBounds("target index out of bounds")
            if len(np.unique(pairs, axis=0)) != len(pairs):
                raise ValueError("duplicate correspondences")
        pairs.setflags(write=False)
        object.__setattr__(self, "pairs", pairs)
        origin = np.arange(len(pairs), dtype=np.int64) if self.origin is None else np.array(self.origin, dtype=np.int64)
        if origin.shape != (len(pairs),):
            raise ValueError("origin must have one entry per pair")
        origin.setflags(write=False)
        object.__setattr__(self, "origin", origin)

    def __len__(self):
        return len(self.pairs)

    @property
    def has_labels(self) -> bool:
        return self.source.has_labels and self.target.has_labels

    @cached_property
    def src_points(self) -> np.ndarray:
        """Source endpoint of every pair, ``(K, 3)``."""
        pts = self.source.points[self.pairs[:, 0]]
        pts.setflags(write=False)
        return pts

    @cached_property
    def dst_points(self) -> np.ndarray:
        pts = self.target.points[self.pairs[:, 1]]
        pts.setflags(write=False)
        return pts

    def endpoint_labels(self) -> tuple[np.ndarray, np.ndarray]:
        if not self.has_labels:
            raise MissingLabels("both clouds need semantic labels")
        return self.source.labels[self.pairs[:, 0]], self.target.labels[self.pairs[:, 1]]

    def pair_labels(self) -> np.ndarray:
        """Class label of every pair; requires a pruned set."""
        ls, lt = self.endpoint_labels()
        if np.any(ls != lt):
            raise NotPruned(f"{int(np.sum(ls != lt))} pairs have disagreeing labels")
        return ls

    def subset(self, indices) -> CorrespondenceSet:
        """Pairs at ``indices`` (order kept), with ``origin`` composed."""
        idx = np.asarray(indices, dtype=np.int64).reshape(-1)
        if len(idx):
            if idx.min() < -len(self) or idx.max() >= len(self):
                raise IndexError("subset index out of range")
            idx = np.where(idx < 0, idx + len(self), idx)
            if not np.all(idx[1:] > idx[:-1]) and len(np.unique(idx)) != len(idx):
                raise ValueError("duplicate correspondences")
        # rows of an already validated set: skip the full re-validation
        out = object.__new__(CorrespondenceSet)
        for name, value in (("source", self.source), ("target", self.target),
                            ("pairs", self.pairs[idx]), ("origin", self.origin[idx])):
            if isinstance(value, np.ndarray):
                value.setflags(write=False)
            object.__setattr__(out, name, value)
        for name in ("src_points", "dst_points"):
            if name in self.__dict__:
                pts = self.__dict__[name][idx]
                pts.setflags(write=False)
                out.__dict__[name] = pts
        return out

    def with_target_labels(self, labels) -> CorrespondenceSet:
        return CorrespondenceSet(self.source, self.target.with_labels(labels), self.pairs, self.origin)


def prune_semantic(c: CorrespondenceSet, drop_unlabeled: bool = False) -> CorrespondenceSet:
    """Keep only pairs whose endpoints carry the same class label.

    Unlabeled (class 0) on both sides counts as agreement unless
    ``drop_unlabeled`` is set; a pair with exactly one unlabeled endpoint is
    always dropped.
    """
    ls, lt = c.endpoint_labels()
    keep = ls == lt
    if drop_unlabeled:
        keep &= ls != UNLABELED
    return c.subset(np.flatnonzero(keep))


def residuals(T: RigidTransform, c: CorrespondenceSet, indices=None) -> np.ndarray:
    """``||R m_k + t - n_k'||`` for every pair (or the pairs at ``indices``)."""
    src, dst = c.src_points, c.dst_points
    if indices is not None:
        idx = np.asarray(indices, dtype=np.int64)
        src, dst = src[idx], dst[idx]
    d = T.apply(src) - dst
    return np.sqrt(np.sum(d * d, axis=1))


def residual(T: RigidTransform, c: CorrespondenceSet, k: int) -> float:
    if not 0 <= k < len(c):
        raise IndexError(f"pair index {k} out of range")
    return float(residuals(T, c, [k])[0])


def count_consensus(
    T: RigidTransform, c: CorrespondenceSet, epsilon: float, subset=None
) -> tuple[int, np.ndarray]:
    """Number and indices of pairs with residual ``<= epsilon``.

    With ``subset`` the scan is restricted to those pair indices and the
    returned indices are still positions in ``c``.
    """
    idx = np.arange(len(c), dtype=np.int64) if subset is None else inlier_set(subset)
    r = residuals(T, c, idx)
    inliers = idx[r <= epsilon]
    return len(inliers), inliers


def group_by_label(c: CorrespondenceSet) -> dict[int, np.ndarray]:
    """Map class id -> ascending pair indices holding that class."""
    if len(c) == 0:
        return {}
    labels = c.pair_labels()
    return {int(k): np.flatnonzero(labels == k) for k in np.unique(labels)}
