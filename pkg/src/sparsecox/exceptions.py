"""Exception types raised by sparsecox."""


class SparseCoxError(Exception):
    """Base class for all sparsecox errors."""


class DataIngestionError(SparseCoxError, ValueError):
    """Raised when a CSV file or array input cannot be turned into a valid dataset."""


class NoEventsError(SparseCoxError, ValueError):
    """Raised when an operation requires at least one observed event."""


class ScoreOverflowError(SparseCoxError, FloatingPointError):
    """Raised when a linear predictor exceeds the exp-overflow guard.

    With bounded covariates and a bounded true coefficient vector this
    signals a diverging optimizer, not valid data.
    """


class GammaInfeasibleError(SparseCoxError, RuntimeError):
    """Raised when a Dantzig LP subproblem is infeasible; advise a larger gamma."""


class SingularInformationError(SparseCoxError, RuntimeError):
    """Raised when the restricted information matrix is singular or not positive definite."""


class UnconvergedFitError(SparseCoxError, RuntimeError):
    """Raised when an operation requires a converged fit but received one without a certificate."""
