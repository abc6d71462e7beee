"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """Raised when an argument violates an operation's contract."""


class SpaceMismatchError(InvalidInputError):
    """Raised when points or descriptors from different spaces are mixed."""


class ResolventFailureError(RuntimeError):
    """Generic resolvent solver failed to certify the requested tolerance.

    Carries the best iterate found and its certified gap so callers (the
    proximal driver in particular) can record a truncated trace instead of
    silently using a bad point.
    """

    def __init__(self, message, best_point=None, gap=None, inner_iters=0):
        super().__init__(message)
        self.best_point = best_point
        self.gap = gap
        self.inner_iters = inner_iters
