"""SO(3)/SE(3) primitives used by every solver.

Conventions:
    - A ``RigidTransform`` T = (R, t) maps points as p' = R p + t.  The
      LiDAR-to-camera extrinsic maps LiDAR-frame coordinates into the left
      camera frame; the stereo extrinsic maps left-camera coordinates into
      the right camera frame.
    - 6-vectors stack rotation first: [rot(3), trans(3)].  Covariances use
      the same ordering (rad^2 block, then m^2 block).
    - Solvers parameterize locally with a left perturbation applied to the
      rotation and an additive translation step:
          R <- exp(skew(d_rot)) R,   t <- t + d_trans.
      This keeps the point-to-plane Jacobian in the n^T [-skew(R p), I]
      form used by the covariance propagation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

_ORTHO_TOL = 1e-9


def skew(v) -> np.ndarray:
    """Cross-product matrix: skew(v) @ w == cross(v, w)."""
    v = np.asarray(v, dtype=np.float64)
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def so3_exp(w) -> np.ndarray:
    """Rotation matrix of an axis-angle 3-vector (Rodrigues)."""
    w = np.asarray(w, dtype=np.float64)
    if not np.all(np.isfinite(w)):
        raise ValueError("non-finite rotation vector")
    angle = float(np.linalg.norm(w))
    S = skew(w)
    S2 = S @ S
    if angle < 1e-8:
        # Series keeps the map smooth through zero.
        return np.eye(3) + S + 0.5 * S2
    a = math.sin(angle) / angle
    b = (1.0 - math.cos(angle)) / (angle * angle)
    return np.eye(3) + a * S + b * S2


def so3_log(R) -> np.ndarray:
    """Axis-angle 3-vector of a rotation matrix, angle in [0, pi]."""
    R = np.asarray(R, dtype=np.float64)
    cos_angle = min(1.0, max(-1.0, 0.5 * (np.trace(R) - 1.0)))
    angle = math.acos(cos_angle)
    if angle < 1e-8:
        return np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]]) * 0.5
    if math.pi - angle < 1e-6:
        # Near pi the antisymmetric part vanishes; recover the axis from
        # the diagonal of R + I.
        A = 0.5 * (R + np.eye(3))
        axis = np.sqrt(np.maximum(np.diag(A), 0.0))
        k = int(np.argmax(axis))
        axis = A[:, k] / axis[k]
        axis /= np.linalg.norm(axis)
        # Fix the sign using the off-diagonal antisymmetric residue.
        w = np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
        if np.dot(w, axis) < 0.0:
            axis = -axis
        return axis * angle
    scale = angle / (2.0 * math.sin(angle))
    return scale * np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])


def _so3_left_jacobian(w) -> np.ndarray:
    w = np.asarray(w, dtype=np.float64)
    angle = float(np.linalg.norm(w))
    S = skew(w)
    S2 = S @ S
    if angle < 1e-8:
        return np.eye(3) + 0.5 * S + S2 / 6.0
    a2 = angle * angle
    c1 = (1.0 - math.cos(angle)) / a2
    c2 = (angle - math.sin(angle)) / (a2 * angle)
    return np.eye(3) + c1 * S + c2 * S2


def _so3_left_jacobian_inv(w) -> np.ndarray:
    w = np.asarray(w, dtype=np.float64)
    angle = float(np.linalg.norm(w))
    S = skew(w)
    S2 = S @ S
    if angle < 1e-8:
        return np.eye(3) - 0.5 * S + S2 / 12.0
    half = 0.5 * angle
    cot = half / math.tan(half)
    c2 = (1.0 - cot) / (angle * angle)
    return np.eye(3) - 0.5 * S + c2 * S2


@dataclass(frozen=True)
class RigidTransform:
    """SE(3) element, p' = rotation @ p + translation."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        R = np.array(self.rotation, dtype=np.float64)
        t = np.array(self.translation, dtype=np.float64).reshape(3)
        if R.shape != (3, 3):
            raise ValueError("rotation must be 3x3")
        if not (np.all(np.isfinite(R)) and np.all(np.isfinite(t))):
            raise ValueError("non-finite transform entries")
        err = np.abs(R.T @ R - np.eye(3)).max()
        if err > _ORTHO_TOL:
            raise ValueError(f"rotation not orthonormal (max error {err:.3e})")
        if abs(np.linalg.det(R) - 1.0) > _ORTHO_TOL:
            raise ValueError("rotation determinant is not +1")
        R.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", t)

    @staticmethod
    def identity() -> "RigidTransform":
        return RigidTransform(np.eye(3), np.zeros(3))

    @staticmethod
    def from_matrix(M) -> "RigidTransform":
        M = np.asarray(M, dtype=np.float64)
        if M.shape != (4, 4):
            raise ValueError("expected a 4x4 homogeneous matrix")
        if np.abs(M[3] - np.array([0.0, 0.0, 0.0, 1.0])).max() > 1e-9:
            raise ValueError("last row must be [0, 0, 0, 1]")
        return RigidTransform(M[:3, :3], M[:3, 3])

    def as_matrix(self) -> np.ndarray:
        M = np.eye(4)
        M[:3, :3] = self.rotation
        M[:3, 3] = self.translation
        return M

    def apply(self, points) -> np.ndarray:
        """Transform one (3,) point or an (N, 3) array of points."""
        p = np.asarray(points, dtype=np.float64)
        return p @ self.rotation.T + self.translation

    def rotate(self, vectors) -> np.ndarray:
        """Rotate direction vectors (no translation)."""
        v = np.asarray(vectors, dtype=np.float64)
        return v @ self.rotation.T

    def inverse(self) -> "RigidTransform":
        Rt = self.rotation.T
        return RigidTransform(Rt, -Rt @ self.translation)

    def __matmul__(self, other: "RigidTransform") -> "RigidTransform":
        return RigidTransform(
            self.rotation @ other.rotation,
            self.rotation @ other.translation + self.translation,
        )


@dataclass(frozen=True)
class Twist:
    """se(3) tangent element: axis-angle rotation part + translation part."""

    rot_part: np.ndarray
    trans_part: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        r = np.array(self.rot_part, dtype=np.float64).reshape(3)
        t = np.array(self.trans_part, dtype=np.float64).reshape(3)
        if not (np.all(np.isfinite(r)) and np.all(np.isfinite(t))):
            raise ValueError("non-finite twist entries")
        if np.linalg.norm(r) >= math.pi:
            raise ValueError("rotation magnitude must stay below pi")
        r.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "rot_part", r)
        object.__setattr__(self, "trans_part", t)

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.rot_part, self.trans_part])

    @staticmethod
    def from_vector(v) -> "Twist":
        v = np.asarray(v, dtype=np.float64).reshape(6)
        return Twist(v[:3], v[3:])


def se3_exp(t: Twist) -> RigidTransform:
    """Exponential map of a twist onto SE(3)."""
    R = so3_exp(t.rot_part)
    V = _so3_left_jacobian(t.rot_part)
    return RigidTransform(R, V @ t.trans_part)


def se3_log(T: RigidTransform) -> Twist:
    """Inverse of :func:`se3_exp` on the canonical chart (angle < pi)."""
    w = so3_log(T.rotation)
    Vinv = _so3_left_jacobian_inv(w)
    return Twist(w, Vinv @ T.translation)


def apply_twist(delta, T: RigidTransform) -> RigidTransform:
    """Apply the solvers' local step: R <- exp(skew(d_rot)) R, t <- t + d_trans."""
    d = np.asarray(delta, dtype=np.float64).reshape(6)
    return RigidTransform(so3_exp(d[:3]) @ T.rotation, T.translation + d[3:])


def tangent_basis(w) -> np.ndarray:
    """Orthonormal basis (3x2) of the plane orthogonal to a unit vector.

    Picks the standard axis least aligned with ``w`` and Gram-Schmidts it,
    so the result is deterministic and does not jump between nearby inputs
    away from axis ties.
    """
    w = np.asarray(w, dtype=np.float64).reshape(3)
    n = np.linalg.norm(w)
    if n < 1e-6:
        raise ValueError("tangent_basis needs a unit vector, got near-zero norm")
    if abs(n - 1.0) > 1e-6:
        raise ValueError("tangent_basis input must be unit norm within 1e-6")
    k = int(np.argmin(np.abs(w)))
    e = np.zeros(3)
    e[k] = 1.0
    n1 = e - np.dot(e, w) * w
    n1 /= np.linalg.norm(n1)
    n2 = np.cross(w, n1)
    return np.column_stack([n1, n2])


def rotation_error_deg(Ra, Rb) -> float:
    """Geodesic angle in degrees between two rotation matrices."""
    Ra = np.asarray(Ra, dtype=np.float64)
    Rb = np.asarray(Rb, dtype=np.float64)
    return math.degrees(np.linalg.norm(so3_log(Ra @ Rb.T)))


def transform_errors(T_est: RigidTransform, T_true: RigidTransform) -> tuple[float, float]:
    """(rotation error in degrees, translation error in meters)."""
    rot = rotation_error_deg(T_est.rotation, T_true.rotation)
    trans = float(np.linalg.norm(T_est.translation - T_true.translation))
    return rot, trans
