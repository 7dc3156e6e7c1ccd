"""Transitions, observation models, and TD errors."""

import numpy as np
import pytest

from kalmantd.errors import ContractViolation
from kalmantd.funcapprox import LinearFeatures, boyan_features, identity_features, tabular_q
from kalmantd.statespace import (
    ObservationModel,
    Q_OPT,
    SARSA,
    Transition,
    V_EVAL,
    observation_features,
    observe,
    td_error,
)


def two_state_features():
    return LinearFeatures(lambda s: np.array([1.0, 0.0]) if s == 0 else np.array([0.0, 1.0]), 2)


class TestTransition:
    def test_reward_must_be_finite(self):
        with pytest.raises(ContractViolation):
            Transition.v_eval(0, 1, np.inf)

    def test_sarsa_requires_actions(self):
        with pytest.raises(ContractViolation):
            Transition(SARSA, 0.0, 0, 1)
        with pytest.raises(ContractViolation):
            Transition(SARSA, 0.0, 0, 1, action=0)

    def test_terminal_flag(self):
        assert Transition.v_eval(0, None, 1.0).terminal
        assert not Transition.v_eval(0, 1, 1.0).terminal


class TestObservationModel:
    def test_qopt_requires_action_set(self):
        approx = tabular_q(1, 2)
        with pytest.raises(ContractViolation):
            ObservationModel(approx, 0.5, Q_OPT)
        with pytest.raises(ContractViolation):
            ObservationModel(approx, 0.5, Q_OPT, actions=())

    def test_gamma_range(self):
        with pytest.raises(ContractViolation):
            ObservationModel(two_state_features(), 1.5, V_EVAL)


class TestObserve:
    def test_v_eval_direct(self):
        model = ObservationModel(two_state_features(), 0.9, V_EVAL)
        got = observe(model, [1.0, 2.0], Transition.v_eval(0, 1, 0.0))
        assert got == pytest.approx(1.0 - 0.9 * 2.0)

    def test_qopt_direct(self):
        model = ObservationModel(tabular_q(1, 2), 0.5, Q_OPT, actions=(0, 1))
        t = Transition.q_opt(0, 0, 0, 0.0)
        got = observe(model, [1.0, 3.0], t)
        assert got == pytest.approx(1.0 - 0.5 * 3.0)

    def test_sarsa_gamma_zero_ignores_next(self):
        model = ObservationModel(tabular_q(2, 2), 0.0, SARSA)
        rng = np.random.default_rng(0)
        for _ in range(10):
            theta = rng.standard_normal(4)
            a = observe(model, theta, Transition.sarsa(0, 1, 1, 0, 0.0))
            b = observe(model, theta, Transition.sarsa(0, 1, 1, 1, 0.0))
            assert a == pytest.approx(b)

    def test_variant_mismatch(self):
        model = ObservationModel(two_state_features(), 0.9, V_EVAL)
        with pytest.raises(ContractViolation):
            observe(model, [0.0, 0.0], Transition.sarsa(0, 0, 1, 0, 0.0))

    def test_terminal_drops_next_value(self):
        model = ObservationModel(two_state_features(), 0.9, V_EVAL)
        got = observe(model, [4.0, 2.0], Transition.v_eval(0, None, 0.0))
        assert got == pytest.approx(4.0)

    def test_linear_in_theta_for_evaluation_variants(self):
        rng = np.random.default_rng(5)
        approx = identity_features(3)
        for gamma in (0.0, 0.5, 1.0):
            model = ObservationModel(approx, gamma, V_EVAL)
            t = Transition.v_eval(rng.standard_normal(3), rng.standard_normal(3), 0.0)
            for _ in range(20):
                t1, t2 = rng.standard_normal(3), rng.standard_normal(3)
                lhs = observe(model, t1 + t2, t)
                rhs = observe(model, t1, t) + observe(model, t2, t) - observe(model, np.zeros(3), t)
                assert lhs == pytest.approx(rhs, abs=1e-10)

    def test_qopt_dominates_sarsa(self):
        rng = np.random.default_rng(6)
        approx = tabular_q(3, 3)
        q_model = ObservationModel(approx, 0.7, Q_OPT, actions=(0, 1, 2))
        s_model = ObservationModel(approx, 0.7, SARSA)
        for _ in range(50):
            theta = rng.standard_normal(9)
            s, a, sn = rng.integers(3), rng.integers(3), rng.integers(3)
            q_obs = observe(q_model, theta, Transition.q_opt(s, a, sn, 0.0))
            for an in range(3):
                s_obs = observe(s_model, theta, Transition.sarsa(s, a, sn, an, 0.0))
                assert q_obs <= s_obs + 1e-12


class TestTdError:
    def test_definition(self):
        model = ObservationModel(two_state_features(), 0.9, V_EVAL)
        t = Transition.v_eval(0, 1, 0.0)
        assert td_error(model, [1.0, 2.0], t) == pytest.approx(0.8)

    def test_exact_fit_gives_zero(self):
        model = ObservationModel(two_state_features(), 0.9, V_EVAL)
        theta = [1.8, 2.0]
        t = Transition.v_eval(0, 1, observe(model, theta, Transition.v_eval(0, 1, 0.0)))
        assert td_error(model, theta, t) == pytest.approx(0.0, abs=1e-12)

    def test_chain_optimum_has_zero_error(self):
        # Final chain transition, reward -2, at the exact solution.
        approx = LinearFeatures(boyan_features, 4)
        model = ObservationModel(approx, 1.0, V_EVAL)
        t = Transition.v_eval(1, 0, -2.0)
        assert td_error(model, [-24.0, -16.0, -8.0, 0.0], t) == pytest.approx(0.0, abs=1e-12)


class TestObservationFeatures:
    def test_matches_manual_difference(self):
        approx = LinearFeatures(boyan_features, 4)
        model = ObservationModel(approx, 1.0, V_EVAL)
        t = Transition.v_eval(5, 4, -3.0)
        np.testing.assert_allclose(
            observation_features(model, t), boyan_features(5) - boyan_features(4)
        )

    def test_terminal_uses_current_only(self):
        approx = LinearFeatures(boyan_features, 4)
        model = ObservationModel(approx, 1.0, V_EVAL)
        t = Transition.v_eval(1, None, -2.0)
        np.testing.assert_allclose(observation_features(model, t), boyan_features(1))

    def test_qopt_rejected(self):
        model = ObservationModel(tabular_q(2, 2), 0.9, Q_OPT, actions=(0, 1))
        with pytest.raises(ContractViolation):
            observation_features(model, Transition.q_opt(0, 0, 1, 0.0))
