"""Deterministic sigma-point sampling of Gaussian beliefs.

A Gaussian belief (mean, covariance) is represented by 2n+1 deterministic
samples.  Pushing the samples through an arbitrary mapping and re-weighting
gives the first two moments of the image distribution, exactly for affine
mappings and to second order otherwise.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation, DecompositionError, SigmaPointEvaluationError

SYM_TOL = 1e-12
EIG_TOL = -1e-10


@dataclass(frozen=True)
class GaussianBelief:
    """Mean vector and covariance matrix of a parameter estimate.

    Treated as an immutable value: operations return new beliefs and never
    mutate the arrays in place.
    """

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float).reshape(-1)
        cov = np.asarray(self.cov, dtype=float)
        if cov.shape != (mean.size, mean.size):
            raise ContractViolation(
                f"covariance shape {cov.shape} does not match mean length {mean.size}"
            )
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise ContractViolation("belief contains non-finite entries")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def dim(self):
        return self.mean.size

    def validate(self, sym_tol=SYM_TOL, eig_tol=EIG_TOL):
        """Check symmetry and positive semi-definiteness; raise on failure."""
        asym = float(np.max(np.abs(self.cov - self.cov.T))) if self.dim else 0.0
        if asym > sym_tol:
            raise ContractViolation(f"covariance asymmetry {asym:.3e} exceeds {sym_tol}")
        min_eig = float(np.min(np.linalg.eigvalsh(self.cov))) if self.dim else 0.0
        if min_eig < eig_tol:
            raise ContractViolation(f"covariance min eigenvalue {min_eig:.3e} below {eig_tol}")
        return self


@dataclass(frozen=True)
class SigmaPointSet:
    """2n+1 deterministic samples and weights representing a belief.

    ``weights`` applies to first moments.  ``cov_weights`` differs from it
    only for the scaled variant, where the central point carries an extra
    covariance correction term.
    """

    points: np.ndarray  # (2n+1, n)
    weights: np.ndarray  # (2n+1,)
    kappa: float
    cov_weights: np.ndarray = None

    def __post_init__(self):
        if self.cov_weights is None:
            object.__setattr__(self, "cov_weights", self.weights)

    @property
    def dim(self):
        return self.points.shape[1]

    def reconstruct(self):
        """Weighted mean and covariance of the points (should match the source)."""
        mean = self.weights @ self.points
        centered = self.points - mean
        cov = (centered * self.cov_weights[:, None]).T @ centered
        return mean, cov


def _psd_cholesky(matrix):
    """Lower Cholesky factor of a PSD matrix, with one jittered retry.

    The exact zero matrix factors to zero (numpy rejects it as singular).
    Other decomposition failures get eps*I added once, eps scaled to the
    largest diagonal entry, before giving up.
    """
    if not np.any(matrix):
        return np.zeros_like(matrix)
    try:
        return np.linalg.cholesky(matrix)
    except np.linalg.LinAlgError:
        pass
    eps = 1e-9 * max(1.0, float(np.max(np.diag(matrix))))
    jittered = matrix + eps * np.eye(matrix.shape[0])
    try:
        return np.linalg.cholesky(jittered)
    except np.linalg.LinAlgError as exc:
        raise DecompositionError(
            "Cholesky failed after jitter "
            f"(eps={eps:.3e}, diag min={np.min(np.diag(matrix)):.3e}, "
            f"max={np.max(np.diag(matrix)):.3e})",
            matrix=np.array(matrix),
        ) from exc


def generate_sigma_points(belief: GaussianBelief, kappa: float = 0.0) -> SigmaPointSet:
    """Sample 2n+1 sigma points from a belief.

    Points are the mean plus/minus the columns of the Cholesky factor of
    (n + kappa) * cov; the central weight is kappa / (n + kappa) and the
    others 1 / (2 (n + kappa)).
    """
    n = belief.dim
    if n + kappa <= 0:
        raise ContractViolation(f"n + kappa must be positive, got {n} + {kappa}")
    scale = _psd_cholesky((n + kappa) * belief.cov)
    points = np.empty((2 * n + 1, n))
    points[0] = belief.mean
    points[1 : n + 1] = belief.mean + scale.T
    points[n + 1 :] = belief.mean - scale.T
    weights = np.full(2 * n + 1, 1.0 / (2.0 * (n + kappa)))
    weights[0] = kappa / (n + kappa)
    return SigmaPointSet(points=points, weights=weights, kappa=float(kappa))


@dataclass(frozen=True)
class SigmaScheme:
    """Sigma-point sampling configuration.

    ``alpha = 0`` selects the plain transform with scaling factor kappa.
    A positive alpha selects the scaled variant: points are drawn at
    spread alpha * sqrt(n + kappa) and the central covariance weight gets
    the usual (1 - alpha^2 + beta) correction.  The scaled form exists
    because the plain transform cannot tighten its spread below sqrt(n)
    without negative weights, which destroys positive semi-definiteness
    in high dimension.
    """

    kappa: float = 0.0
    alpha: float = 0.0
    beta: float = 2.0

    def __post_init__(self):
        if self.alpha < 0:
            raise ContractViolation("alpha must be nonnegative (0 = plain transform)")

    def generate(self, belief: GaussianBelief) -> SigmaPointSet:
        if self.alpha == 0.0:
            return generate_sigma_points(belief, self.kappa)
        return generate_scaled_sigma_points(belief, self.alpha, self.beta, self.kappa)


def as_scheme(spec) -> SigmaScheme:
    """Accept a bare kappa (plain transform) or a full SigmaScheme."""
    if isinstance(spec, SigmaScheme):
        return spec
    return SigmaScheme(kappa=float(spec))


def generate_scaled_sigma_points(belief: GaussianBelief, alpha: float,
                                 beta: float = 2.0, kappa: float = 0.0) -> SigmaPointSet:
    """Scaled sigma points: spread alpha * sqrt(n + kappa) around the mean."""
    n = belief.dim
    if alpha <= 0:
        raise ContractViolation("scaled transform requires alpha > 0")
    lam = alpha * alpha * (n + kappa) - n
    if n + lam <= 0:
        raise ContractViolation(f"alpha^2 (n + kappa) must be positive, got {n + lam}")
    scale = _psd_cholesky((n + lam) * belief.cov)
    points = np.empty((2 * n + 1, n))
    points[0] = belief.mean
    points[1 : n + 1] = belief.mean + scale.T
    points[n + 1 :] = belief.mean - scale.T
    weights = np.full(2 * n + 1, 1.0 / (2.0 * (n + lam)))
    weights[0] = lam / (n + lam)
    cov_weights = weights.copy()
    cov_weights[0] += 1.0 - alpha * alpha + beta
    return SigmaPointSet(points=points, weights=weights, kappa=float(kappa),
                         cov_weights=cov_weights)


def propagate(sigma_set: SigmaPointSet, mapping):
    """First two moments of mapping(X) plus the input/output cross-covariance.

    Returns (mean_y, cov_y, cross_xy) with mean_y of shape (m,), cov_y of
    shape (m, m) and cross_xy of shape (n, m).  Scalar-valued mappings are
    treated as m = 1.
    """
    images = []
    for j, point in enumerate(sigma_set.points):
        try:
            images.append(np.atleast_1d(np.asarray(mapping(point), dtype=float)))
        except Exception as exc:  # noqa: BLE001 - re-raised with the point index
            raise SigmaPointEvaluationError(j, exc) from exc
    images = np.array(images)
    return propagate_images(sigma_set, images)


def propagate_images(sigma_set: SigmaPointSet, images: np.ndarray):
    """Weighted statistics from precomputed sigma-point images."""
    images = images.reshape(len(sigma_set.weights), -1)
    w = sigma_set.weights
    wc = sigma_set.cov_weights
    mean_y = w @ images
    dy = images - mean_y
    cov_y = (dy * wc[:, None]).T @ dy
    dx = sigma_set.points - (w @ sigma_set.points)
    cross_xy = (dx * wc[:, None]).T @ dy
    return mean_y, cov_y, cross_xy
