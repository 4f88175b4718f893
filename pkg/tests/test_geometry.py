"""Tests for the SO(3)/SE(3) primitives.

The exponential map is checked against a standalone Rodrigues + V-matrix
oracle written directly from the closed forms, independent of the library
implementation.
"""

import math

import numpy as np
import pytest

from lscalib.geometry import (
    RigidTransform,
    Twist,
    apply_twist,
    rotation_error_deg,
    se3_exp,
    se3_log,
    skew,
    so3_exp,
    tangent_basis,
)


def oracle_rodrigues(w):
    """R = I + sin(a)/a K + (1-cos(a))/a^2 K^2 with K = skew(w)."""
    w = np.asarray(w, dtype=float)
    a = np.linalg.norm(w)
    K = np.array([[0, -w[2], w[1]], [w[2], 0, -w[0]], [-w[1], w[0], 0]])
    if a == 0.0:
        return np.eye(3)
    return np.eye(3) + (math.sin(a) / a) * K + ((1 - math.cos(a)) / a**2) * (K @ K)


def oracle_v_matrix(w):
    """V = I + (1-cos a)/a^2 K + (a - sin a)/a^3 K^2."""
    w = np.asarray(w, dtype=float)
    a = np.linalg.norm(w)
    K = np.array([[0, -w[2], w[1]], [w[2], 0, -w[0]], [-w[1], w[0], 0]])
    if a == 0.0:
        return np.eye(3)
    return (
        np.eye(3)
        + ((1 - math.cos(a)) / a**2) * K
        + ((a - math.sin(a)) / a**3) * (K @ K)
    )


class TestSkew:
    def test_zero_vector(self):
        assert np.array_equal(skew([0, 0, 0]), np.zeros((3, 3)))

    def test_unit_cross_identity(self):
        out = skew([1, 0, 0]) @ np.array([0, 1, 0])
        np.testing.assert_allclose(out, [0, 0, 1], atol=0)

    def test_matches_cross_product(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            v, w = rng.normal(size=3), rng.normal(size=3)
            np.testing.assert_allclose(skew(v) @ w, np.cross(v, w), atol=1e-15)
            np.testing.assert_allclose(skew(v).T, -skew(v), atol=0)


class TestExpLog:
    def test_zero_twist_is_identity(self):
        T = se3_exp(Twist(np.zeros(3), np.zeros(3)))
        np.testing.assert_allclose(T.rotation, np.eye(3), atol=1e-15)
        np.testing.assert_allclose(T.translation, np.zeros(3), atol=1e-15)

    def test_quarter_turn_about_z(self):
        T = se3_exp(Twist([0.0, 0.0, math.pi / 2], np.zeros(3)))
        expected = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
        np.testing.assert_allclose(T.rotation, expected, atol=1e-15)

    def test_matches_rodrigues_oracle(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            w = rng.normal(size=3)
            w *= rng.uniform(0.0, math.pi - 0.2) / np.linalg.norm(w)
            v = rng.normal(size=3)
            T = se3_exp(Twist(w, v))
            np.testing.assert_allclose(T.rotation, oracle_rodrigues(w), atol=1e-12)
            np.testing.assert_allclose(T.translation, oracle_v_matrix(w) @ v, atol=1e-12)

    def test_log_exp_round_trip(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            w = rng.normal(size=3)
            w *= rng.uniform(0.0, math.pi - 0.1) / np.linalg.norm(w)
            t = Twist(w, rng.normal(size=3))
            back = se3_log(se3_exp(t))
            np.testing.assert_allclose(back.rot_part, t.rot_part, atol=1e-9)
            np.testing.assert_allclose(back.trans_part, t.trans_part, atol=1e-9)

    def test_log_near_pi(self):
        w = np.array([0.3, -0.5, 0.8])
        w *= (math.pi - 1e-4) / np.linalg.norm(w)
        t = Twist(w, np.array([0.2, 0.0, -1.0]))
        back = se3_log(se3_exp(t))
        np.testing.assert_allclose(back.rot_part, w, atol=1e-6)

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            Twist([np.nan, 0, 0], np.zeros(3))
        with pytest.raises(ValueError):
            so3_exp([np.inf, 0, 0])


class TestRigidTransform:
    def test_rejects_non_orthonormal(self):
        with pytest.raises(ValueError):
            RigidTransform(np.eye(3) * 1.001, np.zeros(3))

    def test_rejects_reflection(self):
        R = np.diag([1.0, 1.0, -1.0])
        with pytest.raises(ValueError):
            RigidTransform(R, np.zeros(3))

    def test_compose_inverse(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            T = se3_exp(Twist(rng.normal(size=3) * 0.5, rng.normal(size=3)))
            I = T @ T.inverse()
            np.testing.assert_allclose(I.rotation, np.eye(3), atol=1e-12)
            np.testing.assert_allclose(I.translation, np.zeros(3), atol=1e-12)

    def test_composition_associative(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            A, B, C = (
                se3_exp(Twist(rng.normal(size=3) * 0.4, rng.normal(size=3)))
                for _ in range(3)
            )
            left = (A @ B) @ C
            right = A @ (B @ C)
            np.testing.assert_allclose(left.rotation, right.rotation, atol=1e-9)
            np.testing.assert_allclose(left.translation, right.translation, atol=1e-9)

    def test_apply_matches_matrix_form(self):
        rng = np.random.default_rng(5)
        T = se3_exp(Twist(rng.normal(size=3) * 0.3, rng.normal(size=3)))
        pts = rng.normal(size=(17, 3))
        hom = np.c_[pts, np.ones(17)] @ T.as_matrix().T
        np.testing.assert_allclose(T.apply(pts), hom[:, :3], atol=1e-12)

    def test_round_trip_matrix(self):
        T = se3_exp(Twist([0.1, -0.2, 0.05], [1.0, 2.0, -0.5]))
        back = RigidTransform.from_matrix(T.as_matrix())
        np.testing.assert_allclose(back.rotation, T.rotation, atol=0)
        np.testing.assert_allclose(back.translation, T.translation, atol=0)


class TestApplyTwist:
    def test_zero_step_is_identity(self):
        T = se3_exp(Twist([0.2, 0.1, -0.3], [1.0, 0.0, 2.0]))
        T2 = apply_twist(np.zeros(6), T)
        np.testing.assert_allclose(T2.as_matrix(), T.as_matrix(), atol=0)

    def test_step_splits_rotation_and_translation(self):
        T = RigidTransform.identity()
        d = np.array([0.0, 0.0, 0.1, 1.0, -2.0, 0.5])
        T2 = apply_twist(d, T)
        np.testing.assert_allclose(T2.rotation, so3_exp([0, 0, 0.1]), atol=1e-15)
        np.testing.assert_allclose(T2.translation, d[3:], atol=0)


class TestTangentBasis:
    def test_z_axis_spans_xy(self):
        N = tangent_basis([0.0, 0.0, 1.0])
        np.testing.assert_allclose(N.T @ np.array([0, 0, 1.0]), np.zeros(2), atol=1e-15)
        np.testing.assert_allclose(N[2], np.zeros(2), atol=1e-15)

    def test_x_axis_orthonormal(self):
        N = tangent_basis([1.0, 0.0, 0.0])
        np.testing.assert_allclose(N.T @ N, np.eye(2), atol=1e-15)

    def test_random_sweep(self):
        rng = np.random.default_rng(6)
        for _ in range(1000):
            w = rng.normal(size=3)
            w /= np.linalg.norm(w)
            N = tangent_basis(w)
            np.testing.assert_allclose(N.T @ w, np.zeros(2), atol=1e-9)
            np.testing.assert_allclose(N.T @ N, np.eye(2), atol=1e-9)
            np.testing.assert_allclose(np.linalg.norm(N, axis=0), np.ones(2), atol=1e-9)

    def test_rejects_near_zero(self):
        with pytest.raises(ValueError):
            tangent_basis([1e-9, 0.0, 0.0])


def test_rotation_error_deg():
    Ra = so3_exp([0.0, 0.0, math.radians(5.0)])
    assert abs(rotation_error_deg(Ra, np.eye(3)) - 5.0) < 1e-9
