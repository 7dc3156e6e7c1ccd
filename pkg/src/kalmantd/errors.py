"""Exception types shared across the package."""


class KalmanTdError(Exception):
    """Base class for all errors raised by this package."""


class ContractViolation(KalmanTdError):
    """A caller broke a documented precondition (shape, variant, range)."""


class DecompositionError(KalmanTdError):
    """Cholesky factorization failed even after jitter.

    Carries diagnostics of the offending matrix so the failure can be
    debugged without re-running the filter.
    """

    def __init__(self, message, matrix=None):
        super().__init__(message)
        self.matrix = matrix


class SigmaPointEvaluationError(KalmanTdError):
    """A mapping raised while being evaluated on a sigma point."""

    def __init__(self, index, cause):
        super().__init__(f"mapping failed on sigma point {index}: {cause!r}")
        self.index = index
        self.cause = cause


class SingularInnovation(KalmanTdError):
    """Innovation variance (or an update denominator) is not positive."""


class OffPolicyUnsupported(KalmanTdError):
    """Colored-noise filtering cannot be combined with off-policy targets."""


class GradientUnsupported(KalmanTdError):
    """The approximator does not expose a parameter gradient."""


class NumericsError(KalmanTdError):
    """A numerical invariant was violated (negative variance, non-PSD)."""


class ConfigError(KalmanTdError):
    """Invalid experiment configuration or config-file syntax."""
