"""Kalman-filter temporal-difference learning.

Value-function approximation cast as state estimation: the parameters of a
value (or Q-) function follow a random walk and each observed reward is a
noisy Bellman difference of them.  The package provides the resulting
online filters (KTD-V/SARSA/Q and their colored-noise extensions for
stochastic transitions), uncertainty propagation and an uncertainty-driven
behavior policy, classical TD/LSTD/GPTD baselines, benchmark environments,
and a seeded experiment harness with a CLI.
"""

from . import baselines, envs, funcapprox, harness, ktd, statespace, uncertainty, unscented, xktd
from .errors import KalmanTdError

__all__ = [
    "KalmanTdError",
    "baselines",
    "envs",
    "funcapprox",
    "harness",
    "ktd",
    "statespace",
    "uncertainty",
    "unscented",
    "xktd",
]

__version__ = "0.1.0"
