"""Exception types shared across the package.

The CLI maps ``ValidationError`` to exit code 2 and ``ConvergenceError``
to exit code 3.
"""


class ValidationError(ValueError):
    """Input violates a documented precondition."""


class RangeError(ValidationError):
    """A computed quantity left the configured magnitude cap."""


class ConvergenceError(RuntimeError):
    """An iterative estimator ran out of iterations.

    ``best_estimate`` carries the last value reached so callers can still
    report it.
    """

    def __init__(self, message, best_estimate=None):
        super().__init__(message)
        self.best_estimate = best_estimate
