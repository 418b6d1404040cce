"""Exception types shared across the package."""


class NGWError(Exception):
    """Base class for all package-specific errors."""


class ContractViolation(NGWError, ValueError):
    """An input violates a documented precondition."""


class NotPSDError(NGWError, ValueError):
    """A matrix required to be positive semi-definite is not."""


class DegenerateProjection(NGWError, ValueError):
    """The zero matrix has no nearest point on the Frobenius sphere."""


class StaleTapeError(NGWError, RuntimeError):
    """A tape was replayed after its parameters were mutated."""


class TrainingDivergence(NGWError, RuntimeError):
    """Optimization produced a non-finite or exploding loss.

    Carries the step index at which divergence was detected and the last
    finite loss values observed before it.
    """

    def __init__(self, message, step=None, last_losses=None):
        super().__init__(message)
        self.step = step
        self.last_losses = last_losses


class SolverDivergence(NGWError, RuntimeError):
    """The discrete solver produced a non-finite objective."""


class SingularFit(NGWError, ValueError):
    """A least-squares design is rank deficient beyond ridge rescue."""


class DegenerateMetric(NGWError, ValueError):
    """A metric denominator is zero (e.g. zero target variance)."""


class ParseError(NGWError, ValueError):
    """A data file failed to parse; carries the offending line number."""

    def __init__(self, message, line_no=None):
        super().__init__(message)
        self.line_no = line_no


class OrientationError(NGWError, RuntimeError):
    """The analytic map failed its pushforward-covariance validation."""
