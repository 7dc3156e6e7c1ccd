"""Observation models tying approximators to Bellman operator variants.

One observed step is a Transition; an ObservationModel binds a function
approximator, a discount, and one of the three operator variants:

  V_EVAL  g(theta) = V(s)   - gamma * V(s')
  SARSA   g(theta) = Q(s,a) - gamma * Q(s',a')
  Q_OPT   g(theta) = Q(s,a) - gamma * max_b Q(s',b)

A transition whose next state is None is terminal: the next-value term is
dropped (the post-terminal value is identically zero).
"""

import math
from dataclasses import dataclass
from typing import Any, Optional

from .errors import ContractViolation

V_EVAL = "v_eval"
SARSA = "sarsa"
Q_OPT = "q_opt"


@dataclass(frozen=True)
class Transition:
    variant: str
    reward: float
    state: Any
    next_state: Optional[Any]
    action: Optional[Any] = None
    next_action: Optional[Any] = None

    def __post_init__(self):
        if self.variant not in (V_EVAL, SARSA, Q_OPT):
            raise ContractViolation(f"unknown transition variant {self.variant!r}")
        if not math.isfinite(self.reward):
            raise ContractViolation(f"reward must be finite, got {self.reward!r}")
        if self.variant in (SARSA, Q_OPT) and self.action is None:
            raise ContractViolation(f"{self.variant} transition requires an action")
        if self.variant == SARSA and self.next_state is not None and self.next_action is None:
            raise ContractViolation("sarsa transition requires a next action")

    @property
    def terminal(self):
        return self.next_state is None

    @staticmethod
    def v_eval(state, next_state, reward):
        return Transition(V_EVAL, float(reward), state, next_state)

    @staticmethod
    def sarsa(state, action, next_state, next_action, reward):
        return Transition(SARSA, float(reward), state, next_state, action, next_action)

    @staticmethod
    def q_opt(state, action, next_state, reward):
        return Transition(Q_OPT, float(reward), state, next_state, action)


@dataclass(frozen=True)
class ObservationModel:
    approximator: Any
    gamma: float
    variant: str
    actions: Optional[tuple] = None

    def __post_init__(self):
        if self.variant not in (V_EVAL, SARSA, Q_OPT):
            raise ContractViolation(f"unknown model variant {self.variant!r}")
        if not 0.0 <= self.gamma <= 1.0:
            raise ContractViolation(f"gamma must lie in [0, 1], got {self.gamma}")
        if self.variant == Q_OPT:
            if self.actions is None or len(self.actions) == 0:
                raise ContractViolation("q_opt model requires a finite non-empty action set")
            object.__setattr__(self, "actions", tuple(self.actions))


def observe(model: ObservationModel, theta, t: Transition) -> float:
    """Evaluate g_t(theta) for the model's operator variant."""
    if t.variant != model.variant:
        raise ContractViolation(
            f"transition variant {t.variant!r} does not match model {model.variant!r}"
        )
    f = model.approximator
    if model.variant == V_EVAL:
        current = f.evaluate(theta, t.state)
        nxt = 0.0 if t.terminal else f.evaluate(theta, t.next_state)
    elif model.variant == SARSA:
        current = f.evaluate(theta, t.state, t.action)
        nxt = 0.0 if t.terminal else f.evaluate(theta, t.next_state, t.next_action)
    else:
        current = f.evaluate(theta, t.state, t.action)
        if t.terminal:
            nxt = 0.0
        else:
            nxt = max(f.evaluate(theta, t.next_state, b) for b in model.actions)
    return current - model.gamma * nxt


def td_error(model: ObservationModel, theta, t: Transition) -> float:
    """Reward-prediction error: reward minus the observed Bellman difference."""
    return t.reward - observe(model, theta, t)


def observation_features(model: ObservationModel, t: Transition):
    """Feature difference phi(s[,a]) - gamma * phi(s'[,a']) for linear models.

    With a linear approximator the observation is the dot product of this
    vector with theta.  Terminal transitions contribute no next-state term.
    """
    if t.variant != model.variant:
        raise ContractViolation(
            f"transition variant {t.variant!r} does not match model {model.variant!r}"
        )
    if model.variant == Q_OPT:
        raise ContractViolation("q_opt observations are not linear in the parameters")
    f = model.approximator
    if model.variant == V_EVAL:
        phi = f.features(t.state)
        phi_next = None if t.terminal else f.features(t.next_state)
    else:
        phi = f.features(t.state, t.action)
        phi_next = None if t.terminal else f.features(t.next_state, t.next_action)
    if phi_next is None:
        return phi
    return phi - model.gamma * phi_next
