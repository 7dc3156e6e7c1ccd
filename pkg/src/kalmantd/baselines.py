"""Classical comparison learners sharing the gain-times-TD-error update."""

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation, SingularInnovation
from .funcapprox import gradient_of
from .statespace import ObservationModel, Q_OPT, SARSA, Transition, V_EVAL, td_error


def direct_update(theta, model: ObservationModel, t: Transition, alpha: float):
    """Stochastic-gradient bootstrap step: theta + alpha * delta * grad V(s)."""
    if not alpha > 0:
        raise ContractViolation("learning rate must be positive")
    theta = np.asarray(theta, dtype=float)
    delta = td_error(model, theta, t)
    if model.variant == V_EVAL:
        grad = gradient_of(model.approximator, theta, t.state)
    else:
        grad = gradient_of(model.approximator, theta, t.state, t.action)
    return theta + alpha * delta * grad


def residual_update(theta, model: ObservationModel, t: Transition, alpha: float):
    """Bellman-residual gradient step along grad(V(s) - gamma V(s'))."""
    if not alpha > 0:
        raise ContractViolation("learning rate must be positive")
    if model.variant == Q_OPT:
        raise ContractViolation("residual updates require an evaluation variant")
    theta = np.asarray(theta, dtype=float)
    delta = td_error(model, theta, t)
    if model.variant == V_EVAL:
        grad = gradient_of(model.approximator, theta, t.state)
        if not t.terminal:
            grad = grad - model.gamma * gradient_of(model.approximator, theta, t.next_state)
    else:
        grad = gradient_of(model.approximator, theta, t.state, t.action)
        if not t.terminal:
            grad = grad - model.gamma * gradient_of(
                model.approximator, theta, t.next_state, t.next_action
            )
    return theta + alpha * delta * grad


@dataclass(frozen=True)
class LstdState:
    """Recursive least-squares TD state: estimate plus its gain matrix."""

    theta: np.ndarray
    C: np.ndarray

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float).reshape(-1)
        C = np.asarray(self.C, dtype=float)
        if C.ndim == 0:
            C = float(C) * np.eye(theta.size)
        if C.shape != (theta.size, theta.size) or not np.all(np.isfinite(C)):
            raise ContractViolation("C must be a finite square matrix matching theta")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "C", C)


def lstd_update(state: LstdState, phi_s, phi_s_next, gamma: float, r: float) -> LstdState:
    """Sherman-Morrison recursion with instrument phi(s), regressor H.

    The denominator pairs C with phi(s), not with H; a terminal next state
    is passed as a zero feature vector.
    """
    phi_s = np.asarray(phi_s, dtype=float).reshape(-1)
    phi_s_next = np.asarray(phi_s_next, dtype=float).reshape(-1)
    H = phi_s - gamma * phi_s_next
    C_phi = state.C @ phi_s
    denom = 1.0 + float(H @ C_phi)
    if denom == 0.0:
        raise SingularInnovation("LSTD update denominator is zero")
    K = C_phi / denom
    delta = r - float(H @ state.theta)
    C = state.C - np.outer(C_phi, H @ state.C) / denom
    return LstdState(state.theta + K * delta, C)


@dataclass(frozen=True)
class GptdState:
    """Parametric Gaussian-process TD state: estimate, covariance, residual var."""

    theta: np.ndarray
    P: np.ndarray
    sigma2: float

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float).reshape(-1)
        P = np.asarray(self.P, dtype=float)
        if P.ndim == 0:
            P = float(P) * np.eye(theta.size)
        if P.shape != (theta.size, theta.size):
            raise ContractViolation("P must be a square matrix matching theta")
        if not self.sigma2 > 0:
            raise ContractViolation("sigma2 must be positive")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "P", P)


def gptd_update(state: GptdState, phi_s, phi_s_next, gamma: float, r: float) -> GptdState:
    """Covariance-weighted recursion on the feature difference."""
    phi_s = np.asarray(phi_s, dtype=float).reshape(-1)
    phi_s_next = np.asarray(phi_s_next, dtype=float).reshape(-1)
    dphi = phi_s - gamma * phi_s_next
    P_dphi = state.P @ dphi
    denom = state.sigma2 + float(dphi @ P_dphi)
    K = P_dphi / denom
    delta = r - float(dphi @ state.theta)
    P = state.P - np.outer(P_dphi, P_dphi) / denom
    P = 0.5 * (P + P.T)
    return GptdState(state.theta + K * delta, P, state.sigma2)
