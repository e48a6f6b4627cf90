"""Exception and warning types raised across the package."""


class SqueezebandError(Exception):
    """Base class for all package errors."""


class ParameterError(SqueezebandError, ValueError):
    """Invalid physical parameters or configuration."""


class ThresholdError(SqueezebandError, ValueError):
    """The parametric drive is at or above the instability threshold."""


class StepSizeError(ParameterError):
    """Time step too coarse for the fastest rate in the model."""


class ConvergenceError(SqueezebandError, RuntimeError):
    """A numerical solve or integration failed to converge.

    ``diagnostics`` carries whatever the solver knew at the time of failure.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class DivergenceError(ConvergenceError):
    """Variances or estimates grew without bound."""


class ValidityWarning(UserWarning):
    """A parameter lies outside the regime where the model's approximations hold."""


class ConfigError(SqueezebandError, ValueError):
    """A run configuration is malformed or refers to unknown parameters."""
