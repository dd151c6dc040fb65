"""Exception types shared across the package."""


class SkewCurveError(Exception):
    """Base class for all package errors."""


class ValidationError(SkewCurveError, ValueError):
    """An input violates a model or configuration invariant."""


class DomainError(SkewCurveError, ValueError):
    """An argument lies outside the domain of an operation."""


class PreconditionError(SkewCurveError, ValueError):
    """A caller-supplied object does not satisfy an operation's precondition."""


class NumericalFailure(SkewCurveError, ArithmeticError):
    """A numerical routine produced a non-finite value or failed to converge.

    ``step`` carries the time-step index for simulation failures.
    """

    def __init__(self, message, step=None):
        super().__init__(message if step is None else f"{message} (step {step})")
        self.step = step
