"""Exception types shared across modules (the CLI maps them to exit codes)."""


class PreconditionError(ValueError):
    """An input is outside what an operation supports."""


class BoundNotApplicable(PreconditionError):
    """The a-priori smoothing bound does not cover this problem."""


class EmptyRegionError(PreconditionError):
    """The feasible region has no measurable volume."""


class InconclusiveError(RuntimeError):
    """A noisy comparison could not be decided."""

    def __init__(self, message: str, iteration: int | None = None):
        super().__init__(message)
        self.iteration = iteration
