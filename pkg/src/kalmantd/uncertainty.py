"""Propagating parameter uncertainty to value estimates.

The parameters being a random vector, the approximated value at any state
is a random variable; its mean and spread follow from pushing sigma points
of the parameter belief through the approximator.  The spread drives a
fully explorative behavior policy that prefers uncertain actions.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation, NumericsError
from .unscented import GaussianBelief, as_scheme

_VAR_FLOOR = -1e-10


@dataclass(frozen=True)
class ValueStats:
    mean: float
    std_dev: float


def _variance_to_std(variance):
    if variance < _VAR_FLOOR:
        raise NumericsError(f"value variance {variance:.3e} below {_VAR_FLOOR}")
    return float(np.sqrt(max(variance, 0.0)))


def _images(points, approximator, s, a):
    if getattr(approximator, "is_linear", False):
        return points @ approximator.features(s, a)
    return np.array([approximator.evaluate(theta, s, a) for theta in points])


def value_stats(belief: GaussianBelief, approximator, s, a=None, kappa=0.0) -> ValueStats:
    """Mean and standard deviation of the approximated value at s (and a)."""
    sigma = as_scheme(kappa).generate(belief)
    images = _images(sigma.points, approximator, s, a)
    mean = float(sigma.weights @ images)
    variance = float(sigma.cov_weights @ (images - mean) ** 2)
    return ValueStats(mean=mean, std_dev=_variance_to_std(variance))


def action_std_devs(belief: GaussianBelief, approximator, s, actions, kappa=0.0):
    """Per-action value standard deviations from one shared sigma-point set."""
    sigma = as_scheme(kappa).generate(belief)
    if (getattr(approximator, "is_linear", False)
            and hasattr(approximator, "features_matrix")
            and tuple(actions) == tuple(range(len(actions)))):
        images = sigma.points @ approximator.features_matrix(s)
    else:
        images = np.column_stack(
            [_images(sigma.points, approximator, s, a) for a in actions]
        )
    means = sigma.weights @ images
    variances = sigma.cov_weights @ (images - means) ** 2
    return np.array([_variance_to_std(v) for v in variances])


def action_probabilities(std_devs):
    """Uncertainty-weighted probabilities, uniform when all spreads vanish."""
    std_devs = np.asarray(std_devs, dtype=float)
    total = std_devs.sum()
    if total <= 0.0:
        return np.full(std_devs.size, 1.0 / std_devs.size)
    return std_devs / total


def active_policy(belief: GaussianBelief, approximator, s, actions,
                  kappa=0.0, rng=None):
    """Sample an action with probability proportional to its value spread."""
    if len(actions) == 0:
        raise ContractViolation("active policy requires a non-empty action set")
    if rng is None:
        raise ContractViolation("active policy requires an injected random source")
    stds = action_std_devs(belief, approximator, s, actions, kappa)
    probs = action_probabilities(stds)
    index = int(rng.choice(len(actions), p=probs))
    return actions[index]
