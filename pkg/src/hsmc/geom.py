"""Rigid transforms, closed-form SVD alignment and registration error metrics.

Points are plain numpy arrays: a single point has shape ``(3,)`` and a set of
points has shape ``(N, 3)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateSample

ORTHO_TOL = 1e-9


def as_point(p) -> np.ndarray:
    """Coerce ``p`` to a finite float64 3-vector."""
    arr = np.asarray(p, dtype=np.float64)
    if arr.shape != (3,):
        raise ValueError(f"expected a 3-vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("point has non-finite components")
    return arr


def as_points(pts) -> np.ndarray:
    arr = np.asarray(pts, dtype=np.float64)
    if arr.size == 0:
        return arr.reshape(0, 3)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ValueError(f"expected an (N, 3) array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("point set has non-finite components")
    return arr


@dataclass(frozen=True, eq=False)
class RigidTransform:
    """Rotation ``R`` in SO(3) plus translation ``t``; maps ``p`` to ``R p + t``."""

    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        R = np.array(self.rotation, dtype=np.float64)
        t = np.array(self.translation, dtype=np.float64).reshape(-1)
        if R.shape != (3, 3) or t.shape != (3,):
            raise ValueError("rotation must be 3x3 and translation a 3-vector")
        if not (np.all(np.isfinite(R)) and np.all(np.isfinite(t))):
            raise ValueError("transform has non-finite entries")
        if np.max(np.abs(R.T @ R - np.eye(3))) > ORTHO_TOL:
            raise ValueError("rotation is not orthonormal")
        if abs(np.linalg.det(R) - 1.0) > ORTHO_TOL:
            raise ValueError("rotation determinant is not +1")
        R.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", t)

    @classmethod
    def _trusted(cls, R: np.ndarray, t: np.ndarray) -> RigidTransform:
        """Wrap an ``(R, t)`` already known to be a proper rigid motion (e.g. from ``kabsch``)."""
        obj = object.__new__(cls)
        R = np.array(R, dtype=np.float64)
        t = np.array(t, dtype=np.float64)
        R.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(obj, "rotation", R)
        object.__setattr__(obj, "translation", t)
        return obj

    @classmethod
    def identity(cls) -> RigidTransform:
        return cls()

    @classmethod
    def from_matrix(cls, m) -> RigidTransform:
        m = np.asarray(m, dtype=np.float64)
        return cls(m[:3, :3], m[:3, 3])

    def as_matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m

    def apply(self, pts) -> np.ndarray:
        """Transform a single point ``(3,)`` or a point set ``(N, 3)``."""
        pts = np.asarray(pts, dtype=np.float64)
        return pts @ self.rotation.T + self.translation

    def compose(self, other: RigidTransform) -> RigidTransform:
        """Return ``self ∘ other`` (apply ``other`` first)."""
        R = self.rotation @ other.rotation
        return RigidTransform(_reorthonormalize(R), self.rotation @ other.translation + self.translation)

    def inverse(self) -> RigidTransform:
        Rt = self.rotation.T
        return RigidTransform(Rt, -Rt @ self.translation)

    def __eq__(self, other):
        if not isinstance(other, RigidTransform):
            return NotImplemented
        return np.array_equal(self.rotation, other.rotation) and np.array_equal(
            self.translation, other.translation
        )

    def __repr__(self):
        return f"RigidTransform(rotation={self.rotation.tolist()}, translation={self.translation.tolist()})"


def _reorthonormalize(R: np.ndarray) -> np.ndarray:
    U, _, Vt = np.linalg.svd(R)
    d = np.sign(np.linalg.det(U @ Vt))
    return U @ np.diag([1.0, 1.0, d]) @ Vt


def apply_transform(T: RigidTransform, p) -> np.ndarray:
    return T.apply(p)


def rotation_from_axis_angle(axis, angle_rad: float) -> np.ndarray:
    """Rodrigues' formula. ``axis`` need not be normalized."""
    axis = np.asarray(axis, dtype=np.float64)
    n = np.linalg.norm(axis)
    if n == 0.0:
        raise ValueError("rotation axis must be nonzero")
    kx, ky, kz = axis / n
    K = np.array([[0.0, -kz, ky], [kz, 0.0, -kx], [-ky, kx, 0.0]])
    R = np.eye(3) + np.sin(angle_rad) * K + (1.0 - np.cos(angle_rad)) * (K @ K)
    return _reorthonormalize(R)


def random_rotation(rng: np.random.Generator, max_angle_deg: float = 180.0) -> np.ndarray:
    """Random axis, angle uniform in ``[0, max_angle_deg]``."""
    axis = rng.normal(size=3)
    while np.linalg.norm(axis) < 1e-12:
        axis = rng.normal(size=3)
    angle = np.deg2rad(rng.uniform(0.0, max_angle_deg))
    return rotation_from_axis_angle(axis, angle)


def random_transform(
    rng: np.random.Generator, max_angle_deg: float = 180.0, max_translation: float = 1.0
) -> RigidTransform:
    R = random_rotation(rng, max_angle_deg)
    t = rng.uniform(-max_translation, max_translation, size=3)
    return RigidTransform(R, t)


def _det3(m: np.ndarray) -> float:
    (a, b, c), (d, e, f), (g, h, i) = m.tolist()
    return a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g)


def kabsch(src: np.ndarray, dst: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Raw ``(R, t)`` least-squares fit on validated ``(N, 3)`` float arrays.

    Raises DegenerateSample when the centered cross-covariance has rank < 2.
    """
    n = len(src)
    mu_s = np.add.reduce(src, axis=0) / n
    mu_d = np.add.reduce(dst, axis=0) / n
    A = src - mu_s
    B = dst - mu_d
    U, S, Vt = np.linalg.svd(A.T @ B)
    # rank < 2 relative to the dominant direction: collinear or coincident
    if not S[1] > 1e-12 * S[0]:
        raise DegenerateSample("point sets are collinear or coincident")
    V = Vt.T
    R = V @ U.T
    if _det3(R) < 0:
        V[:, 2] = -V[:, 2]
        R = V @ U.T
    return R, mu_d - R @ mu_s


def estimate_rigid_svd(src, dst) -> RigidTransform:
    """Least-squares rigid transform taking ``src`` onto ``dst`` (Kabsch).

    Raises DegenerateSample for fewer than three pairs or when the centered
    cross-covariance has rank below two (collinear or coincident points).
    """
    src = as_points(src)
    dst = as_points(dst)
    if src.shape != dst.shape:
        raise ValueError("src and dst must have the same shape")
    if len(src) < 3:
        raise DegenerateSample(f"need at least 3 pairs, got {len(src)}")
    R, t = kabsch(src, dst)
    return RigidTransform(R, t)


def angular_error(R, R_gt) -> float:
    """Rotation distance in degrees, ``2 asin(||R - R_gt||_F / (2 sqrt 2))``."""
    diff = np.asarray(R, dtype=np.float64) - np.asarray(R_gt, dtype=np.float64)
    # the Frobenius norm of a difference is symmetric bit-for-bit since only squares enter
    x = np.sqrt(np.sum(diff * diff)) / (2.0 * np.sqrt(2.0))
    return float(np.degrees(2.0 * np.arcsin(min(max(x, 0.0), 1.0))))


def translation_error(t, t_gt) -> float:
    diff = np.asarray(t, dtype=np.float64) - np.asarray(t_gt, dtype=np.float64)
    return float(np.sqrt(np.sum(diff * diff)))


def transform_errors(T: RigidTransform, T_gt: RigidTransform) -> tuple[float, float]:
    """``(angular error in degrees, translation error in meters)``."""
    return angular_error(T.rotation, T_gt.rotation), translation_error(T.translation, T_gt.translation)
