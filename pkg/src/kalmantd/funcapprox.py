"""Parameter-to-value evaluators.

All approximators share a small protocol:

  - ``param_dim``: length of the parameter vector
  - ``is_linear``: True when value = features(s [, a]) . theta exactly
  - ``evaluate(theta, s [, a])``: the approximated value
  - ``gradient(theta, s [, a])``: d value / d theta (where supported)

Linear ones additionally expose ``features``; blocked action bases expose
``features_matrix`` returning one column per action.
"""

import numpy as np

from .errors import ContractViolation, GradientUnsupported


def _check_theta(theta, dim):
    theta = np.asarray(theta, dtype=float).reshape(-1)
    if theta.size != dim:
        raise ContractViolation(f"theta has length {theta.size}, expected {dim}")
    return theta


class LinearFeatures:
    """Linear value function over an explicit feature map."""

    is_linear = True

    def __init__(self, feature_fn, dim):
        self._feature_fn = feature_fn
        self.param_dim = int(dim)

    def features(self, s, a=None):
        if a is not None:
            raise ContractViolation("state-value features take no action")
        phi = np.asarray(self._feature_fn(s), dtype=float).reshape(-1)
        if phi.size != self.param_dim:
            raise ContractViolation(
                f"feature map returned length {phi.size}, expected {self.param_dim}"
            )
        return phi

    def evaluate(self, theta, s, a=None):
        theta = _check_theta(theta, self.param_dim)
        return float(self.features(s, a) @ theta)

    def gradient(self, theta, s, a=None):
        _check_theta(theta, self.param_dim)
        return self.features(s, a)


def identity_features(dim):
    """States are feature vectors themselves (synthetic-benchmark helper)."""
    return LinearFeatures(lambda s: np.asarray(s, dtype=float), dim)


def tabular(n_states):
    """Indicator features: one parameter per state, states indexed 0..n-1."""

    def indicator(s):
        phi = np.zeros(n_states)
        phi[int(s)] = 1.0
        return phi

    return LinearFeatures(indicator, n_states)


class BlockedActionFeatures:
    """Q-function basis: one feature block per action, inactive blocks zero."""

    is_linear = True

    def __init__(self, state_feature_fn, block_dim, n_actions):
        self._state_feature_fn = state_feature_fn
        self.block_dim = int(block_dim)
        self.n_actions = int(n_actions)
        self.param_dim = self.block_dim * self.n_actions

    def _block(self, s):
        phi = np.asarray(self._state_feature_fn(s), dtype=float).reshape(-1)
        if phi.size != self.block_dim:
            raise ContractViolation(
                f"state features have length {phi.size}, expected {self.block_dim}"
            )
        return phi

    def features(self, s, a=None):
        if a is None:
            raise ContractViolation("blocked Q features require an action index")
        a = int(a)
        if not 0 <= a < self.n_actions:
            raise ContractViolation(f"action index {a} outside 0..{self.n_actions - 1}")
        full = np.zeros(self.param_dim)
        full[a * self.block_dim : (a + 1) * self.block_dim] = self._block(s)
        return full

    def features_matrix(self, s):
        """(param_dim, n_actions) matrix with column a = features(s, a)."""
        block = self._block(s)
        full = np.zeros((self.param_dim, self.n_actions))
        for a in range(self.n_actions):
            full[a * self.block_dim : (a + 1) * self.block_dim, a] = block
        return full

    def evaluate(self, theta, s, a=None):
        theta = _check_theta(theta, self.param_dim)
        if a is None:
            raise ContractViolation("blocked Q features require an action index")
        a = int(a)
        block = theta[a * self.block_dim : (a + 1) * self.block_dim]
        return float(self._block(s) @ block)

    def gradient(self, theta, s, a=None):
        _check_theta(theta, self.param_dim)
        return self.features(s, a)


def tabular_q(n_states, n_actions):
    """Indicator Q features over (state, action) pairs."""

    def indicator(s):
        phi = np.zeros(n_states)
        phi[int(s)] = 1.0
        return phi

    return BlockedActionFeatures(indicator, n_states, n_actions)


class RbfBasis:
    """Gaussian kernel features exp(-||s - c||^2 / (2 sigma^2)).

    With ``n_actions`` set the basis is blocked per action (Q-function);
    otherwise it is a plain state-value basis.  ``constant`` prepends a
    bias feature of 1 to each block.  Kernels are not normalized.
    """

    is_linear = True

    def __init__(self, centers, std_dev, constant=False, n_actions=None):
        centers = np.atleast_2d(np.asarray(centers, dtype=float))
        if std_dev <= 0:
            raise ContractViolation("RBF std_dev must be positive")
        self.centers = centers
        self.std_dev = float(std_dev)
        self.constant = bool(constant)
        block_dim = centers.shape[0] + (1 if constant else 0)
        if n_actions is None:
            self._blocked = None
            self.param_dim = block_dim
        else:
            self._blocked = BlockedActionFeatures(self._state_features, block_dim, n_actions)
            self.param_dim = self._blocked.param_dim

    def _state_features(self, s):
        s = np.asarray(s, dtype=float).reshape(-1)
        sq = np.sum((self.centers - s) ** 2, axis=1)
        phi = np.exp(-sq / (2.0 * self.std_dev**2))
        if self.constant:
            phi = np.concatenate(([1.0], phi))
        return phi

    def features(self, s, a=None):
        if self._blocked is not None:
            return self._blocked.features(s, a)
        if a is not None:
            raise ContractViolation("state-value RBF basis takes no action")
        return self._state_features(s)

    def features_matrix(self, s):
        if self._blocked is None:
            raise ContractViolation("features_matrix requires an action-blocked basis")
        return self._blocked.features_matrix(s)

    def evaluate(self, theta, s, a=None):
        theta = _check_theta(theta, self.param_dim)
        return float(self.features(s, a) @ theta)

    def gradient(self, theta, s, a=None):
        _check_theta(theta, self.param_dim)
        return self.features(s, a)

    @property
    def n_actions(self):
        return None if self._blocked is None else self._blocked.n_actions


# Anchor features for the 13-state reward chain: states 12, 8, 4, 0 map to
# the four unit vectors; intermediate states interpolate linearly between
# the surrounding anchors.
_BOYAN_ANCHORS = np.eye(4)[::-1]  # anchor k (k=0 at state 0) -> row


def boyan_features(state):
    """4-dim interpolated features for chain states 0..12."""
    state = int(state)
    if not 0 <= state <= 12:
        raise ContractViolation(f"chain state {state} outside 0..12")
    k, rem = divmod(state, 4)
    if rem == 0:
        return _BOYAN_ANCHORS[k].copy()
    w = rem / 4.0
    return (1.0 - w) * _BOYAN_ANCHORS[k] + w * _BOYAN_ANCHORS[k + 1]


class MatrixExpParam:
    """Single-scalar nonlinear parameterization over a 3-state chain.

    value(theta) = exp((M + eps I) theta) v0 as a 3-vector; evaluating at a
    state returns that component.  The matrix exponential is computed from
    a cached eigendecomposition of M + eps I (distinct eigenvalues), which
    keeps relative error near machine precision.
    """

    is_linear = False
    param_dim = 1

    M = np.array([[1.0, 0.5, 1.5], [1.5, 1.0, 0.5], [0.5, 1.5, 1.0]])
    V0 = np.array([10.0, -7.0, -3.0])

    def __init__(self, epsilon=0.05):
        self.epsilon = float(epsilon)
        self.A = self.M + self.epsilon * np.eye(3)
        evals, evecs = np.linalg.eig(self.A)
        self._evals = evals
        # Modal coefficients of v0.  The matrix is circulant, so its
        # row-sum eigenvector is exactly the ones vector and v0 (zero-sum)
        # has an exactly-zero coefficient there; rounding dirt on that
        # coefficient would otherwise be amplified by the fastest-growing
        # mode.  Coefficients at rounding level are therefore cleaned to 0.
        coeffs = np.linalg.solve(evecs, self.V0.astype(complex))
        coeffs[np.abs(coeffs) <= 1e-12 * np.max(np.abs(coeffs))] = 0.0
        self._modes = evecs * coeffs  # columns: coeff_k * eigvec_k
        self._modes = self._modes[:, coeffs != 0.0]
        self._mode_evals = evals[coeffs != 0.0]

    def value_vector(self, theta):
        theta = _check_theta(theta, 1)[0]
        return np.real(self._modes @ np.exp(self._mode_evals * theta))

    def _state_index(self, s):
        s = int(s)
        if not 1 <= s <= 3:
            raise ContractViolation(f"chain state {s} outside 1..3")
        return s - 1

    def evaluate(self, theta, s, a=None):
        if a is not None:
            raise ContractViolation("state-value parameterization takes no action")
        return float(self.value_vector(theta)[self._state_index(s)])

    def gradient(self, theta, s, a=None):
        th = _check_theta(theta, 1)[0]
        deriv = np.real(self._modes @ (self._mode_evals * np.exp(self._mode_evals * th)))
        return np.array([deriv[self._state_index(s)]])


def gradient_of(approximator, theta, s, a=None):
    """Parameter gradient, raising a typed error when unsupported."""
    grad = getattr(approximator, "gradient", None)
    if grad is None:
        raise GradientUnsupported(f"{type(approximator).__name__} exposes no gradient")
    return np.asarray(grad(theta, s, a), dtype=float).reshape(-1)
