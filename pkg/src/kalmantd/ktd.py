"""Kalman-filter temporal-difference learning.

The parameter vector is the hidden state of a random-walk/observation model:
parameters drift as a random walk, each observed reward is a Bellman
difference of the parameters plus white noise.  One learning step is
predict (inflate covariance by the process noise), compute the innovation
statistics (analytically for linear observation models, through sigma
points otherwise), then apply the optimal linear correction.
"""

from dataclasses import dataclass

import numpy as np

from . import statespace
from .errors import ContractViolation, SingularInnovation
from .statespace import ObservationModel, Q_OPT, SARSA, Transition, V_EVAL, observe
from .unscented import GaussianBelief, as_scheme


@dataclass(frozen=True)
class ProcessNoise:
    """Evolution-noise covariance rule: zero, constant, or adaptive.

    The adaptive form scales the current posterior covariance by a small
    positive eta, which emphasizes recent observations.
    """

    kind: str
    eta: float = 0.0
    matrix: np.ndarray = None

    def __post_init__(self):
        if self.kind not in ("zero", "constant", "adaptive"):
            raise ContractViolation(f"unknown process-noise kind {self.kind!r}")
        if self.kind == "adaptive" and not self.eta > 0:
            raise ContractViolation("adaptive process noise requires eta > 0")
        if self.kind == "constant":
            m = np.asarray(self.matrix, dtype=float)
            if m.ndim != 2 or m.shape[0] != m.shape[1]:
                raise ContractViolation("constant process noise must be a square matrix")
            if np.max(np.abs(m - m.T)) > 1e-12:
                raise ContractViolation("constant process noise must be symmetric")
            if np.min(np.linalg.eigvalsh(m)) < -1e-10:
                raise ContractViolation("constant process noise must be PSD")
            object.__setattr__(self, "matrix", m)

    @staticmethod
    def zero():
        return ProcessNoise("zero")

    @staticmethod
    def adaptive(eta):
        return ProcessNoise("adaptive", eta=float(eta))

    @staticmethod
    def constant(matrix):
        return ProcessNoise("constant", matrix=matrix)

    def increment(self, cov):
        """Covariance to add during prediction, given the current posterior."""
        if self.kind == "zero":
            return np.zeros_like(cov)
        if self.kind == "adaptive":
            return self.eta * cov
        if self.matrix.shape != cov.shape:
            raise ContractViolation(
                f"process-noise shape {self.matrix.shape} does not match {cov.shape}"
            )
        return self.matrix


@dataclass(frozen=True)
class NoiseConfig:
    observation_variance: float
    process_noise: ProcessNoise

    def __post_init__(self):
        if not self.observation_variance > 0:
            raise ContractViolation("observation variance must be positive")


@dataclass(frozen=True)
class KtdState:
    """Belief over the parameters plus a step counter; a pure value."""

    belief: GaussianBelief
    step: int = 0

    @staticmethod
    def initial(theta0, p0):
        """Build the mandatory prior.  p0 may be a scalar (times identity)."""
        theta0 = np.asarray(theta0, dtype=float).reshape(-1)
        p0 = np.asarray(p0, dtype=float)
        if p0.ndim == 0:
            p0 = float(p0) * np.eye(theta0.size)
        return KtdState(GaussianBelief(theta0, p0), step=0)

    @property
    def theta(self):
        return self.belief.mean

    @property
    def cov(self):
        return self.belief.cov


def predict(state: KtdState, noise: NoiseConfig) -> KtdState:
    """Random-walk prediction: mean unchanged, covariance inflated."""
    cov = state.belief.cov + noise.process_noise.increment(state.belief.cov)
    return KtdState(GaussianBelief(state.belief.mean, cov), state.step)


def statistics_linear(state: KtdState, H, P_n: float):
    """Innovation statistics for a linear observation r = H . theta + n."""
    H = np.asarray(H, dtype=float).reshape(-1)
    belief = state.belief
    r_hat = float(H @ belief.mean)
    P_theta_r = belief.cov @ H
    P_r = float(H @ P_theta_r) + P_n
    return r_hat, P_theta_r, P_r


def _sigma_images(points, model: ObservationModel, t: Transition):
    """Observation images of the sigma points, vectorized for linear bases."""
    f = model.approximator
    if getattr(f, "is_linear", False):
        if model.variant != Q_OPT:
            return points @ statespace.observation_features(model, t)
        q_sa = points @ f.features(t.state, t.action)
        if t.terminal:
            return q_sa
        if hasattr(f, "features_matrix"):
            phi_next = f.features_matrix(t.next_state)
        else:
            phi_next = np.column_stack([f.features(t.next_state, b) for b in model.actions])
        return q_sa - model.gamma * np.max(points @ phi_next, axis=1)
    return np.array([observe(model, point, t) for point in points])


def statistics_ut(state: KtdState, model: ObservationModel, t: Transition, P_n: float, kappa=0.0):
    """Innovation statistics through sigma points of the predicted belief.

    ``kappa`` may be a plain scaling factor or a full SigmaScheme.
    """
    sigma = as_scheme(kappa).generate(state.belief)
    images = _sigma_images(sigma.points, model, t)
    r_hat = float(sigma.weights @ images)
    d = images - r_hat
    wc = sigma.cov_weights
    P_r = float(wc @ (d * d)) + P_n
    P_theta_r = (sigma.points - state.belief.mean).T @ (wc * d)
    return r_hat, P_theta_r, P_r


def corrected_belief(belief: GaussianBelief, r: float, r_hat: float, P_theta_r, P_r: float):
    """Shared correction algebra: gain P_theta_r / P_r, rank-one downdate."""
    if not P_r > 0:
        raise SingularInnovation(f"innovation variance must be positive, got {P_r}")
    P_theta_r = np.asarray(P_theta_r, dtype=float).reshape(-1)
    gain = P_theta_r / P_r
    mean = belief.mean + gain * (r - r_hat)
    cov = belief.cov - np.outer(gain, gain) * P_r
    cov = 0.5 * (cov + cov.T)
    return GaussianBelief(mean, cov)


def correct(state: KtdState, r: float, r_hat: float, P_theta_r, P_r: float) -> KtdState:
    """Apply the optimal linear correction to a predicted state."""
    return KtdState(corrected_belief(state.belief, r, r_hat, P_theta_r, P_r), state.step + 1)


def step(state: KtdState, model: ObservationModel, t: Transition,
         noise: NoiseConfig, kappa=0.0) -> KtdState:
    """One full predict / statistics / correct cycle.

    The analytic path is taken when the approximator declares linearity and
    the variant is not Q-optimization (whose max operator is nonlinear in
    the parameters); otherwise sigma points are used.
    """
    predicted = predict(state, noise)
    if getattr(model.approximator, "is_linear", False) and model.variant != Q_OPT:
        H = statespace.observation_features(model, t)
        r_hat, P_theta_r, P_r = statistics_linear(predicted, H, noise.observation_variance)
    else:
        r_hat, P_theta_r, P_r = statistics_ut(
            predicted, model, t, noise.observation_variance, kappa
        )
    return correct(predicted, t.reward, r_hat, P_theta_r, P_r)
