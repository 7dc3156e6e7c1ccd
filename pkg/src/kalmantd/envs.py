"""Benchmark environments with injected randomness.

All stochasticity flows through the caller-supplied numpy Generator, so a
fixed seed reproduces trajectories exactly.
"""

import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from .errors import ContractViolation


@dataclass(frozen=True)
class StepOutcome:
    next_state: Any
    reward: float
    terminal: bool


def tsitsiklis_step(state: int, rng) -> StepOutcome:
    """Three-state chain: stay or step down with equal probability, reward 0."""
    if state not in (1, 2, 3):
        raise ContractViolation(f"chain state must be 1..3, got {state}")
    if rng.random() < 0.5:
        nxt = state
    else:
        nxt = state - 1 if state > 1 else 3
    return StepOutcome(next_state=nxt, reward=0.0, terminal=False)


def boyan_step(state: int, reward_scale: float, rng) -> StepOutcome:
    """13-state descending chain; state 0 absorbs.

    State 1 moves to 0 with reward -2 * scale; higher states move down one
    or two with equal probability and reward -3 * scale.
    """
    state = int(state)
    if state < 1 or state > 12:
        raise ContractViolation(f"cannot step from chain state {state}")
    if state == 1:
        return StepOutcome(next_state=0, reward=-2.0 * reward_scale, terminal=True)
    drop = 1 if rng.random() < 0.5 else 2
    nxt = state - drop
    return StepOutcome(next_state=nxt, reward=-3.0 * reward_scale, terminal=nxt == 0)


MAZE_ACTIONS = ("left", "right", "up", "down")
_MAZE_MOVES = {"left": (-0.05, 0.0), "right": (0.05, 0.0),
               "up": (0.0, 0.05), "down": (0.0, -0.05)}
MAZE_STEP_SIZE = 0.05
MAZE_GOAL_X = (3.0 / 8.0, 5.0 / 8.0)


def maze_step(pos, action: str, rng=None) -> StepOutcome:
    """Unit-square maze: only the top edge exits; other walls clamp.

    Crossing y = 1 ends the episode with reward +1 when the post-move x
    lies in the goal band, -1 otherwise.  Side and bottom walls clamp the
    position with zero reward.
    """
    x, y = float(pos[0]), float(pos[1])
    if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
        raise ContractViolation(f"position {pos} outside the unit square")
    if action not in _MAZE_MOVES:
        raise ContractViolation(f"unknown maze action {action!r}")
    dx, dy = _MAZE_MOVES[action]
    nx, ny = x + dx, y + dy
    if ny > 1.0:
        reward = 1.0 if MAZE_GOAL_X[0] <= nx <= MAZE_GOAL_X[1] else -1.0
        return StepOutcome(next_state=(nx, 1.0), reward=reward, terminal=True)
    nx = min(max(nx, 0.0), 1.0)
    ny = max(ny, 0.0)
    return StepOutcome(next_state=(nx, ny), reward=0.0, terminal=False)


def maze_start(rng):
    """x from a truncated normal around the center, y near the bottom."""
    while True:
        x = rng.normal(0.5, 0.125)
        if 0.0 <= x <= 1.0:
            break
    return (x, rng.uniform(0.0, 0.05))


@dataclass(frozen=True)
class PendulumParams:
    """Cart-pole physical constants (not fixed by the benchmark description;
    taken from the classic Lagoudakis-Parr setup and overridable)."""

    gravity: float = 9.8
    pole_mass: float = 2.0
    cart_mass: float = 8.0
    pole_length: float = 0.5
    force_scale: float = 50.0
    dt: float = 0.1
    angle_limit: float = math.pi / 2.0

    @property
    def beta(self):
        return 1.0 / (self.pole_mass + self.cart_mass)


DEFAULT_PENDULUM = PendulumParams()
PENDULUM_FORCES = (-1.0, 0.0, 1.0)


def pendulum_accel(phi: float, phi_dot: float, action: float,
                   params: PendulumParams = DEFAULT_PENDULUM) -> float:
    g, m, l, b = params.gravity, params.pole_mass, params.pole_length, params.beta
    num = (g * math.sin(phi)
           - b * m * l * phi_dot * phi_dot * math.sin(2.0 * phi) / 2.0
           - params.force_scale * b * math.cos(phi) * action)
    den = 4.0 * l / 3.0 - b * m * l * math.cos(phi) ** 2
    return num / den


def pendulum_step(state, action: float, dt: float = None,
                  params: PendulumParams = DEFAULT_PENDULUM) -> StepOutcome:
    """One forward-Euler step of the inverted pendulum.

    Zero reward while the post-step angle stays within the limit; beyond it
    the episode ends with reward -1.  Transitions are deterministic.
    """
    phi, phi_dot = float(state[0]), float(state[1])
    if abs(phi) > params.angle_limit:
        raise ContractViolation(f"state {state} is already terminal")
    if action not in PENDULUM_FORCES:
        raise ContractViolation(f"action must be one of {PENDULUM_FORCES}, got {action}")
    if dt is None:
        dt = params.dt
    accel = pendulum_accel(phi, phi_dot, action, params)
    new_phi_dot = phi_dot + dt * accel
    new_phi = phi + dt * phi_dot
    terminal = abs(new_phi) > params.angle_limit
    return StepOutcome(next_state=(new_phi, new_phi_dot),
                       reward=-1.0 if terminal else 0.0,
                       terminal=terminal)


def pendulum_start(rng, spread: float = 0.1):
    """Perturbed start near the upright equilibrium."""
    return (rng.uniform(-spread, spread), rng.uniform(-spread, spread))
