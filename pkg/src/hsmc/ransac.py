"""Seeded RANSAC for rigid transforms over a subset of correspondences."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .corr import CorrespondenceSet, inlier_set
from .errors import DegenerateSample, NoValidSample, TooFewPairs
from .geom import RigidTransform, kabsch

SAMPLE_SIZE = 3
MIN_TRIANGLE_AREA = 1e-9
REDRAW_FACTOR = 10


@dataclass(frozen=True)
class RansacConfig:
    epsilon: float = 0.1
    max_iterations: int = 1000
    confidence: float = 0.99
    rng_seed: int = 0

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not 0 < self.confidence < 1:
            raise ValueError("confidence must lie in (0, 1)")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")


def adaptive_iterations(
    inlier_ratio_estimate: float,
    confidence: float,
    sample_size: int = SAMPLE_SIZE,
    max_iterations: int = 1000,
) -> int:
    """Standard stopping rule ``ceil(log(1 - p) / log(1 - w**s))`` clamped to ``[1, max_iterations]``."""
    if not 0 < inlier_ratio_estimate <= 1:
        raise ValueError("inlier ratio must lie in (0, 1]")
    good = inlier_ratio_estimate**sample_size
    if good >= 1.0:
        return 1
    denom = math.log1p(-good)
    if denom == 0.0:
        return max_iterations
    k = math.ceil(math.log(1.0 - confidence) / denom)
    return int(min(max(k, 1), max_iterations))


def _triangle_area(p: np.ndarray) -> float:
    (ax, ay, az), (bx, by, bz), (cx, cy, cz) = p.tolist()
    ux, uy, uz = bx - ax, by - ay, bz - az
    vx, vy, vz = cx - ax, cy - ay, cz - az
    return 0.5 * math.sqrt((uy * vz - uz * vy) ** 2 + (uz * vx - ux * vz) ** 2 + (ux * vy - uy * vx) ** 2)


def ransac_rigid(
    c: CorrespondenceSet, subset, cfg: RansacConfig
) -> tuple[RigidTransform, np.ndarray]:
    """Best-consensus rigid transform over the pairs in ``subset``.

    Each hypothesis comes from 3 randomly drawn pairs; consensus is counted
    within ``subset`` only. The winner is polished by a least-squares fit over
    its inliers, kept only if that does not lose inliers. Returns the
    transform and its inlier indices (positions in ``c``).
    """
    idx = inlier_set(subset)
    if len(idx) < SAMPLE_SIZE:
        raise TooFewPairs(f"need at least {SAMPLE_SIZE} pairs, got {len(idx)}")
    src = c.src_points[idx]
    dst = c.dst_points[idx]
    rng = np.random.Generator(np.random.Philox(cfg.rng_seed))
    eps2 = cfg.epsilon * cfg.epsilon

    best: tuple[np.ndarray, np.ndarray] | None = None
    best_count = -1
    needed = cfg.max_iterations
    iterations = 0
    draws = 0
    max_draws = REDRAW_FACTOR * cfg.max_iterations
    m = len(idx)
    while iterations < needed and draws < max_draws:
        draws += 1
        pick = rng.choice(m, size=SAMPLE_SIZE, replace=False)
        s3, d3 = src[pick], dst[pick]
        if _triangle_area(s3) < MIN_TRIANGLE_AREA or _triangle_area(d3) < MIN_TRIANGLE_AREA:
            continue
        try:
            R, t = kabsch(s3, d3)
        except DegenerateSample:
            continue
        iterations += 1
        d = src @ R.T + t - dst
        count = int(np.count_nonzero(np.einsum("ij,ij->i", d, d) <= eps2))
        if count > best_count:
            best, best_count = (R, t), count
            if count:
                needed = adaptive_iterations(count / m, cfg.confidence, SAMPLE_SIZE, cfg.max_iterations)

    if best is None:
        raise NoValidSample(f"no non-degenerate sample in {draws} draws")

    R, t = best
    inliers = _consensus(R, t, src, dst, cfg.epsilon)
    if len(inliers) >= SAMPLE_SIZE:
        try:
            R2, t2 = kabsch(src[inliers], dst[inliers])
        except DegenerateSample:
            pass
        else:
            polished = _consensus(R2, t2, src, dst, cfg.epsilon)
            if len(polished) >= len(inliers):
                R, t, inliers = R2, t2, polished
    return RigidTransform._trusted(R, t), idx[inliers]


def _consensus(R, t, src, dst, epsilon) -> np.ndarray:
    # same arithmetic as corr.residuals, so results match count_consensus exactly
    d = src @ R.T + t - dst
    return np.flatnonzero(np.sqrt(np.sum(d * d, axis=1)) <= epsilon)
