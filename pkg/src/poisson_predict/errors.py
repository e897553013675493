"""Exception hierarchy.

Every error raised for bad numerical input derives from ``PoissonPredictError``,
which is itself a ``ValueError`` so that callers doing plain input validation
keep working.
"""


class PoissonPredictError(ValueError):
    """Base class for precondition violations."""


class DimensionError(PoissonPredictError):
    """Vector lengths disagree or the model dimension is zero."""


class DomainError(PoissonPredictError):
    """An argument lies outside the domain of the operation."""


class AssumptionError(PoissonPredictError):
    """A construction requires an assumption that does not hold (e.g. sum(beta) > 1)."""


class DivergentIntegralError(DomainError):
    """The generalized beta integral diverges for the requested arguments."""


class LatticeSizeError(PoissonPredictError):
    """A truncated lattice would be too large to enumerate."""
