"""Exception hierarchy shared across the package."""


class GoodwillError(Exception):
    """Base class for all package errors."""


class SchemaError(GoodwillError):
    """CSV or JSON input does not match the expected schema."""


class ValidationError(GoodwillError):
    """Input data violates a documented invariant."""


class ConfigError(GoodwillError):
    """Model or prior configuration is inconsistent."""


class NumericalError(GoodwillError):
    """A numerical routine failed irrecoverably.

    Carries the time index at which the failure occurred when known.
    """

    def __init__(self, message, t=None):
        super().__init__(message if t is None else f"{message} (t={t})")
        self.t = t


class InfeasibleError(GoodwillError):
    """Allocation problem has an empty feasible set."""

    def __init__(self, message, binding=None):
        super().__init__(message)
        self.binding = binding
