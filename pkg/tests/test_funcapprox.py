"""Function approximators: linear bases, RBFs, blocked Q features, and the
scalar matrix-exponential parameterization."""

import numpy as np
import pytest
from scipy.linalg import expm

from kalmantd.errors import ContractViolation, GradientUnsupported
from kalmantd.funcapprox import (
    BlockedActionFeatures,
    LinearFeatures,
    MatrixExpParam,
    RbfBasis,
    boyan_features,
    gradient_of,
    identity_features,
    tabular,
    tabular_q,
)


def finite_difference(fn, theta, h=1e-6):
    theta = np.asarray(theta, dtype=float)
    grad = np.zeros_like(theta)
    for k in range(theta.size):
        up, down = theta.copy(), theta.copy()
        up[k] += h
        down[k] -= h
        grad[k] = (fn(up) - fn(down)) / (2.0 * h)
    return grad


class TestLinearFeatures:
    def test_superposition(self):
        rng = np.random.default_rng(1)
        approx = identity_features(4)
        s = rng.standard_normal(4)
        for _ in range(20):
            t1, t2 = rng.standard_normal(4), rng.standard_normal(4)
            lhs = approx.evaluate(t1 + t2, s)
            rhs = approx.evaluate(t1, s) + approx.evaluate(t2, s) - approx.evaluate(np.zeros(4), s)
            assert lhs == pytest.approx(rhs, abs=1e-12)

    def test_gradient_is_features(self):
        approx = tabular(3)
        np.testing.assert_array_equal(approx.gradient([1.0, 2.0, 3.0], 1), [0.0, 1.0, 0.0])

    def test_dimension_mismatch(self):
        with pytest.raises(ContractViolation):
            identity_features(3).evaluate([1.0, 2.0], np.zeros(3))


class TestBlockedFeatures:
    def test_inactive_blocks_zero(self):
        approx = tabular_q(2, 3)
        phi = approx.features(1, 2)
        assert phi.size == 6
        assert np.all(phi[:4] == 0.0)
        np.testing.assert_array_equal(phi[4:], [0.0, 1.0])

    def test_gradient_zero_outside_active_block(self):
        approx = BlockedActionFeatures(lambda s: np.array([1.0, float(s)]), 2, 2)
        grad = approx.gradient(np.zeros(4), 3.0, 0)
        assert np.all(grad[2:] == 0.0)
        np.testing.assert_array_equal(grad[:2], [1.0, 3.0])

    def test_features_matrix_columns(self):
        approx = tabular_q(2, 3)
        mat = approx.features_matrix(0)
        for a in range(3):
            np.testing.assert_array_equal(mat[:, a], approx.features(0, a))

    def test_action_required(self):
        with pytest.raises(ContractViolation):
            tabular_q(2, 2).evaluate(np.zeros(4), 0)


class TestRbfBasis:
    def test_kernel_at_center_is_one(self):
        approx = RbfBasis([[0.0, 0.0], [1.0, 1.0]], 0.5)
        phi = approx.features((0.0, 0.0))
        assert phi[0] == pytest.approx(1.0)
        assert phi[1] == pytest.approx(np.exp(-2.0 / (2 * 0.25)))

    def test_constant_term_prepended(self):
        approx = RbfBasis([[0.0]], 1.0, constant=True)
        phi = approx.features((5.0,))
        assert phi[0] == 1.0
        assert phi.size == 2

    def test_blocked_q_layout(self):
        approx = RbfBasis([[0.0], [1.0]], 1.0, constant=True, n_actions=3)
        assert approx.param_dim == 9
        phi = approx.features((0.5,), 1)
        assert np.all(phi[:3] == 0.0) and np.all(phi[6:] == 0.0)

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(2)
        approx = RbfBasis(rng.standard_normal((4, 2)), 0.7)
        theta = rng.standard_normal(4)
        s = rng.standard_normal(2)
        fd = finite_difference(lambda th: approx.evaluate(th, s), theta)
        np.testing.assert_allclose(approx.gradient(theta, s), fd, rtol=1e-6, atol=1e-8)


class TestBoyanFeatures:
    def test_anchor_states(self):
        np.testing.assert_array_equal(boyan_features(12), [1, 0, 0, 0])
        np.testing.assert_array_equal(boyan_features(8), [0, 1, 0, 0])
        np.testing.assert_array_equal(boyan_features(4), [0, 0, 1, 0])
        np.testing.assert_array_equal(boyan_features(0), [0, 0, 0, 1])

    def test_interpolated_state(self):
        np.testing.assert_allclose(boyan_features(10), [0.5, 0.5, 0.0, 0.0])

    def test_weights_sum_to_one(self):
        for s in range(13):
            assert boyan_features(s).sum() == pytest.approx(1.0)

    def test_exact_value_function_is_linear(self):
        # The chain's true values are V(s^i) = -2 i, matching the anchor
        # parameters (-24, -16, -8, 0) exactly at every interpolated state.
        theta = np.array([-24.0, -16.0, -8.0, 0.0])
        for s in range(13):
            assert boyan_features(s) @ theta == pytest.approx(-2.0 * s)


class TestMatrixExpParam:
    def test_value_at_zero_is_v0(self):
        approx = MatrixExpParam()
        np.testing.assert_allclose(approx.value_vector([0.0]), [10.0, -7.0, -3.0], atol=1e-12)

    def test_matches_expm_at_moderate_theta(self):
        # Reference: scipy expm applied to v0.  Comparable only where the
        # numerically-polluted fast mode of the reference stays negligible.
        approx = MatrixExpParam()
        for theta in (-3.0, -1.0, -0.25, 0.5, 1.0, 3.0):
            ref = expm(approx.A * theta) @ approx.V0
            got = approx.value_vector([theta])
            np.testing.assert_allclose(got, ref, rtol=1e-10, atol=1e-10)

    def test_evaluate_indexes_states(self):
        approx = MatrixExpParam()
        vec = approx.value_vector([0.7])
        for s in (1, 2, 3):
            assert approx.evaluate([0.7], s) == pytest.approx(vec[s - 1])

    def test_gradient_matches_finite_differences(self):
        approx = MatrixExpParam()
        for theta in (-1.0, 0.0, 1.0):
            for s in (1, 2, 3):
                fd = finite_difference(lambda th: approx.evaluate(th, s), [theta])
                grad = approx.gradient([theta], s)
                np.testing.assert_allclose(grad, fd, rtol=1e-6, atol=1e-8)

    def test_state_range(self):
        with pytest.raises(ContractViolation):
            MatrixExpParam().evaluate([0.0], 4)


class TestGradientOf:
    def test_missing_gradient_rejected(self):
        class NoGrad:
            param_dim = 1

            def evaluate(self, theta, s, a=None):
                return 0.0

        with pytest.raises(GradientUnsupported):
            gradient_of(NoGrad(), [0.0], 0)
