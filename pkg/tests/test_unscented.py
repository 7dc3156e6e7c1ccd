"""Sigma-point sampling and moment propagation."""

import numpy as np
import pytest

from kalmantd.errors import ContractViolation, DecompositionError, SigmaPointEvaluationError
from kalmantd.unscented import (
    GaussianBelief,
    SigmaScheme,
    generate_scaled_sigma_points,
    generate_sigma_points,
    propagate,
)


def random_psd(rng, n, scale=1.0):
    root = rng.standard_normal((n, n))
    return scale * (root @ root.T + 0.1 * np.eye(n))


class TestGaussianBelief:
    def test_shape_mismatch_rejected(self):
        with pytest.raises(ContractViolation):
            GaussianBelief([0.0, 1.0], [[1.0]])

    def test_non_finite_rejected(self):
        with pytest.raises(ContractViolation):
            GaussianBelief([np.nan], [[1.0]])

    def test_validate_flags_asymmetry(self):
        belief = GaussianBelief([0.0, 0.0], [[1.0, 0.5], [0.2, 1.0]])
        with pytest.raises(ContractViolation):
            belief.validate()

    def test_validate_flags_indefinite(self):
        belief = GaussianBelief([0.0, 0.0], [[1.0, 2.0], [2.0, 1.0]])
        with pytest.raises(ContractViolation):
            belief.validate()


class TestGenerateSigmaPoints:
    def test_scalar_kappa_two(self):
        # n=1, cov=1, kappa=2: spread sqrt(3), center weight 2/3.
        s = generate_sigma_points(GaussianBelief([0.0], [[1.0]]), 2.0)
        np.testing.assert_allclose(
            sorted(s.points.ravel()), [-np.sqrt(3.0), 0.0, np.sqrt(3.0)], atol=1e-12
        )
        np.testing.assert_allclose(s.weights, [2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0])

    def test_kappa_zero_weights(self):
        s = generate_sigma_points(GaussianBelief([0.0, 0.0], np.eye(2)), 0.0)
        assert s.weights[0] == 0.0
        np.testing.assert_allclose(s.weights[1:], 0.25)

    def test_zero_covariance_collapses_to_mean(self):
        mean = np.array([3.0, -1.0])
        s = generate_sigma_points(GaussianBelief(mean, np.zeros((2, 2))), 0.0)
        np.testing.assert_array_equal(s.points, np.tile(mean, (5, 1)))

    def test_nonpositive_spread_rejected(self):
        belief = GaussianBelief([0.0], [[1.0]])
        with pytest.raises(ContractViolation):
            generate_sigma_points(belief, -1.0)

    def test_decomposition_failure_carries_matrix(self):
        belief = GaussianBelief([0.0], [[-1.0]])
        with pytest.raises(DecompositionError) as err:
            generate_sigma_points(belief, 0.0)
        assert err.value.matrix is not None

    def test_weights_sum_to_one(self):
        rng = np.random.default_rng(11)
        for n in range(1, 11):
            belief = GaussianBelief(rng.standard_normal(n), random_psd(rng, n))
            s = generate_sigma_points(belief, rng.uniform(0.0, 3.0))
            assert abs(s.weights.sum() - 1.0) <= 1e-12

    def test_reconstruction_matches_belief(self):
        rng = np.random.default_rng(7)
        for n in range(1, 11):
            belief = GaussianBelief(rng.standard_normal(n), random_psd(rng, n))
            s = generate_sigma_points(belief, rng.uniform(0.0, 3.0))
            mean, cov = s.reconstruct()
            np.testing.assert_allclose(mean, belief.mean, atol=1e-12)
            np.testing.assert_allclose(cov, belief.cov, rtol=1e-10, atol=1e-12)

    def test_jitter_recovers_marginally_indefinite(self):
        # A tiny negative eigenvalue within jitter reach must not error.
        cov = np.array([[1.0, 0.0], [0.0, -1e-11]])
        s = generate_sigma_points(GaussianBelief([0.0, 0.0], cov), 0.0)
        assert np.all(np.isfinite(s.points))


class TestPropagate:
    def test_identity_mapping(self):
        rng = np.random.default_rng(3)
        belief = GaussianBelief(rng.standard_normal(3), random_psd(rng, 3))
        s = generate_sigma_points(belief, 0.5)
        mean, cov, cross = propagate(s, lambda x: x)
        np.testing.assert_allclose(mean, belief.mean, atol=1e-12)
        np.testing.assert_allclose(cov, belief.cov, rtol=1e-10, atol=1e-12)
        np.testing.assert_allclose(cross, belief.cov, rtol=1e-10, atol=1e-12)

    def test_linear_scaling(self):
        s = generate_sigma_points(GaussianBelief([0.0], [[1.0]]), 2.0)
        mean, cov, cross = propagate(s, lambda x: 2.0 * x)
        assert abs(mean[0]) <= 1e-12
        np.testing.assert_allclose(cov, [[4.0]], rtol=1e-12)
        np.testing.assert_allclose(cross, [[2.0]], rtol=1e-12)

    def test_square_matches_gaussian_moments(self):
        # For x ~ N(0, 1), E[x^2] = 1 and Var[x^2] = 2; kappa = 2 matches
        # these exactly in one dimension.  Cross-checked with Monte Carlo.
        s = generate_sigma_points(GaussianBelief([0.0], [[1.0]]), 2.0)
        mean, cov, _ = propagate(s, lambda x: x**2)
        np.testing.assert_allclose(mean, [1.0], rtol=1e-12)
        np.testing.assert_allclose(cov, [[2.0]], rtol=1e-12)
        draws = np.random.default_rng(0).standard_normal(2_000_000) ** 2
        assert abs(mean[0] - draws.mean()) < 5e-3
        assert abs(cov[0, 0] - draws.var()) < 2e-2

    def test_affine_mappings_exact(self):
        rng = np.random.default_rng(42)
        for _ in range(100):
            n = int(rng.integers(1, 11))
            m = int(rng.integers(1, 4))
            belief = GaussianBelief(rng.standard_normal(n), random_psd(rng, n))
            A = rng.standard_normal((m, n))
            b = rng.standard_normal(m)
            s = generate_sigma_points(belief, rng.uniform(0.0, 2.0))
            mean, cov, cross = propagate(s, lambda x, A=A, b=b: A @ x + b)
            np.testing.assert_allclose(mean, A @ belief.mean + b, rtol=1e-10, atol=1e-10)
            np.testing.assert_allclose(cov, A @ belief.cov @ A.T, rtol=1e-10, atol=1e-10)
            np.testing.assert_allclose(cross, belief.cov @ A.T, rtol=1e-10, atol=1e-10)

    def test_scalar_output_cov_symmetric_psd(self):
        rng = np.random.default_rng(9)
        for _ in range(50):
            n = int(rng.integers(1, 6))
            belief = GaussianBelief(rng.standard_normal(n), random_psd(rng, n))
            s = generate_sigma_points(belief, rng.uniform(0.0, 2.0))
            _, cov, _ = propagate(s, lambda x: float(np.tanh(x).sum()))
            assert cov.shape == (1, 1)
            assert cov[0, 0] >= -1e-10

    def test_mapping_failure_reports_index(self):
        s = generate_sigma_points(GaussianBelief([0.0], [[1.0]]), 2.0)

        def bad(x):
            if x[0] > 1.0:
                raise ValueError("boom")
            return x

        with pytest.raises(SigmaPointEvaluationError) as err:
            propagate(s, bad)
        assert err.value.index == 1


class TestScaledVariant:
    def test_reconstruction_still_exact(self):
        rng = np.random.default_rng(13)
        for n in (1, 3, 8):
            belief = GaussianBelief(rng.standard_normal(n), random_psd(rng, n))
            s = generate_scaled_sigma_points(belief, alpha=0.2)
            mean, cov = s.reconstruct()
            np.testing.assert_allclose(mean, belief.mean, atol=1e-9)
            np.testing.assert_allclose(cov, belief.cov, rtol=1e-8, atol=1e-10)

    def test_affine_exact(self):
        rng = np.random.default_rng(14)
        belief = GaussianBelief(rng.standard_normal(4), random_psd(rng, 4))
        A = rng.standard_normal((2, 4))
        s = generate_scaled_sigma_points(belief, alpha=0.05)
        mean, cov, cross = propagate(s, lambda x: A @ x)
        np.testing.assert_allclose(mean, A @ belief.mean, rtol=1e-8, atol=1e-8)
        np.testing.assert_allclose(cov, A @ belief.cov @ A.T, rtol=1e-6, atol=1e-8)
        np.testing.assert_allclose(cross, belief.cov @ A.T, rtol=1e-6, atol=1e-8)

    def test_spread_shrinks_with_alpha(self):
        belief = GaussianBelief(np.zeros(30), 10.0 * np.eye(30))
        plain = generate_sigma_points(belief, 0.0)
        scaled = generate_scaled_sigma_points(belief, alpha=0.1)
        assert np.max(np.abs(scaled.points)) < 0.2 * np.max(np.abs(plain.points))

    def test_scheme_dispatch(self):
        belief = GaussianBelief([0.0], [[1.0]])
        plain = SigmaScheme(kappa=2.0).generate(belief)
        assert plain.weights[0] == pytest.approx(2.0 / 3.0)
        scaled = SigmaScheme(kappa=0.0, alpha=0.5).generate(belief)
        assert scaled.cov_weights[0] != scaled.weights[0]
        with pytest.raises(ContractViolation):
            SigmaScheme(alpha=-0.1)
