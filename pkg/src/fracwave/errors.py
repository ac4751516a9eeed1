"""Exception hierarchy shared by every module of the package."""


class FracWaveError(Exception):
    """Base class for all package errors."""


class DomainError(FracWaveError, ValueError):
    """An argument lies outside the domain where the quantity is defined."""


class DegenerateInput(FracWaveError, ValueError):
    """Input is well-formed but carries too little information to proceed."""


class GridMismatch(FracWaveError, ValueError):
    """A draw, grid or regularization index does not belong together."""


class NonConvergence(FracWaveError, RuntimeError):
    """A numerical procedure exhausted its budget before meeting its tolerance.

    The best available estimate is attached so that callers can still report it.
    """

    def __init__(self, message, best_estimate=None, error_estimate=None):
        super().__init__(message)
        self.best_estimate = best_estimate
        self.error_estimate = error_estimate


class ConfigError(FracWaveError, ValueError):
    """An experiment configuration failed validation.

    ``field`` holds the dotted path of the offending entry.
    """

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
        self.message = message


class ComputeError(FracWaveError, RuntimeError):
    """A computation failed inside an experiment run; partial results may exist."""
