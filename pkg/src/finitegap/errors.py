"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Raised when input data violates a documented invariant."""


class SolverError(RuntimeError):
    """Raised when an iterative solver fails to converge.

    Carries the best residual seen so that callers can report diagnostics.
    """

    def __init__(self, message, residual=None, iterate=None):
        super().__init__(message)
        self.residual = residual
        self.iterate = iterate
