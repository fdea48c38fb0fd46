"""Exception types shared across the package."""


class InvalidArgumentError(ValueError):
    """An argument is malformed: wrong dimension, non-finite, or out of range."""


class PreconditionError(ValueError):
    """A documented call-site precondition does not hold (e.g. infeasible point)."""


class ConfigError(ValueError):
    """An experiment configuration is invalid; ``field`` names the offender."""

    def __init__(self, field, message):
        super().__init__(f"config field '{field}': {message}")
        self.field = field


class NumericalFailureError(RuntimeError):
    """An iterative routine exhausted its iteration budget.

    Carries the last iterate and solver diagnostics so callers can flush a
    partial trace before aborting.
    """

    def __init__(self, message, last_iterate=None, diagnostics=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.diagnostics = diagnostics or {}
