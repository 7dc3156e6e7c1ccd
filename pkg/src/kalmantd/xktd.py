"""Colored-noise extension of the Kalman TD filter for stochastic MDPs.

With stochastic transitions the observation residual is a moving-average
noise n_i = -gamma * u_i + u_{i-1} (u white), which is handled by rewriting
it as a two-dimensional autoregressive noise and appending (omega, n) to
the parameter vector.  Each step then filters the extended state with the
same gain/correction algebra; the observation image of a sigma point is
the Bellman difference of its theta part plus its own noise component.

Episodic use: transitions entering a terminal state carry no fresh
residual (the post-terminal return is deterministically zero), so the
noise-block injection is skipped for them; begin_episode re-draws the
residual state for the next start state.  Together these make the filter
with zero process noise match the batch regression of state values onto
per-episode discounted Monte Carlo returns.
"""

from dataclasses import dataclass

import numpy as np

from . import statespace
from .errors import ContractViolation, OffPolicyUnsupported
from .ktd import ProcessNoise, corrected_belief
from .statespace import ObservationModel, Q_OPT, Transition, observe
from .unscented import GaussianBelief, as_scheme


@dataclass(frozen=True)
class ExtendedState:
    """Belief over (theta; omega; n): parameters plus the AR noise pair."""

    belief: GaussianBelief
    step: int = 0

    @property
    def param_dim(self):
        return self.belief.dim - 2

    @property
    def theta(self):
        return self.belief.mean[:-2]

    @property
    def theta_cov(self):
        return self.belief.cov[:-2, :-2]


def noise_block(sigma2: float, gamma: float):
    """Covariance of (u, -gamma u): rank-one, trace sigma2 (1 + gamma^2)."""
    return sigma2 * np.array([[1.0, -gamma], [-gamma, gamma * gamma]])


def evolution_matrix(p: int):
    """Block matrix keeping theta, zeroing omega, and shifting omega into n."""
    F = np.zeros((p + 2, p + 2))
    F[:p, :p] = np.eye(p)
    F[p + 1, p] = 1.0
    return F


def extend_prior(theta0, p0, sigma2: float, gamma: float) -> ExtendedState:
    """Initial extended belief: (theta0; 0; 0) with a stationary noise block."""
    theta0 = np.asarray(theta0, dtype=float).reshape(-1)
    p0 = np.asarray(p0, dtype=float)
    if p0.ndim == 0:
        p0 = float(p0) * np.eye(theta0.size)
    p = theta0.size
    mean = np.concatenate([theta0, [0.0, 0.0]])
    cov = np.zeros((p + 2, p + 2))
    cov[:p, :p] = p0
    cov[p:, p:] = noise_block(sigma2, gamma)
    return ExtendedState(GaussianBelief(mean, cov), step=0)


def begin_episode(state: ExtendedState, sigma2: float, gamma: float) -> ExtendedState:
    """Re-draw the residual state for a fresh episode start.

    The start state's return residual is independent of everything seen so
    far, so the trailing means are zeroed, the trailing block is reset to
    the stationary noise covariance, and cross-covariances with theta are
    cut.  The theta belief itself is untouched.
    """
    p = state.param_dim
    mean = state.belief.mean.copy()
    mean[p:] = 0.0
    cov = state.belief.cov.copy()
    cov[p:, :] = 0.0
    cov[:, p:] = 0.0
    cov[p:, p:] = noise_block(sigma2, gamma)
    return ExtendedState(GaussianBelief(mean, cov), state.step)


def xpredict(state: ExtendedState, sigma2: float, process_noise: ProcessNoise,
             gamma: float, fresh_noise: bool = True) -> ExtendedState:
    """Prediction with the AR-noise evolution.

    Mean maps (theta; omega; n) to (theta; 0; omega); the covariance is
    propagated through the evolution matrix and inflated by the process
    noise on the theta block plus the noise block for the injected
    residual.  ``fresh_noise=False`` (terminal transitions) skips the
    injection because the entered state has a deterministic zero return.
    """
    if not sigma2 > 0:
        raise ContractViolation("sigma2 must be positive")
    p = state.param_dim
    F = evolution_matrix(p)
    mean = F @ state.belief.mean
    cov = F @ state.belief.cov @ F.T
    cov[:p, :p] += process_noise.increment(state.belief.cov[:p, :p])
    if fresh_noise:
        cov[p:, p:] += noise_block(sigma2, gamma)
    cov = 0.5 * (cov + cov.T)
    return ExtendedState(GaussianBelief(mean, cov), state.step)


def _sigma_images(points, model: ObservationModel, t: Transition):
    """g(theta part) + own noise component, vectorized for linear bases."""
    p = points.shape[1] - 2
    noise_part = points[:, p + 1]
    if getattr(model.approximator, "is_linear", False):
        H = statespace.observation_features(model, t)
        return points[:, :p] @ H + noise_part
    return np.array(
        [observe(model, point[:p], t) for point in points]
    ) + noise_part


def xstep(state: ExtendedState, model: ObservationModel, t: Transition,
          sigma2: float, process_noise: ProcessNoise, kappa=0.0) -> ExtendedState:
    """One colored-noise filter step (evaluation variants only).

    Q-optimization targets are rejected: the estimated noise couples each
    update to all past innovations, which an off-policy target cannot
    compensate.
    """
    if model.variant == Q_OPT or t.variant == Q_OPT:
        raise OffPolicyUnsupported(
            "colored-noise filtering supports on-policy evaluation only"
        )
    predicted = xpredict(state, sigma2, process_noise, model.gamma,
                         fresh_noise=not t.terminal)
    sigma = as_scheme(kappa).generate(predicted.belief)
    images = _sigma_images(sigma.points, model, t)
    r_hat = float(sigma.weights @ images)
    d = images - r_hat
    wc = sigma.cov_weights
    P_r = float(wc @ (d * d))
    P_x_r = (sigma.points - predicted.belief.mean).T @ (wc * d)
    belief = corrected_belief(predicted.belief, t.reward, r_hat, P_x_r, P_r)
    return ExtendedState(belief, state.step + 1)
