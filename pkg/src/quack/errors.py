"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes: configuration problems exit
with 2, data problems with 3, numerical failures with 4.
"""


class QuackError(Exception):
    """Base class for all package errors."""


class InputError(QuackError, ValueError):
    """Malformed arguments: dimension mismatches, values out of domain."""


class ParameterError(QuackError, ValueError):
    """Kernel or model hyperparameter outside its valid domain."""


class ResourceError(QuackError, RuntimeError):
    """Request exceeds a configured resource limit (e.g. qubit ceiling)."""


class ConfigError(QuackError, ValueError):
    """Invalid experiment configuration."""


class DataError(QuackError, ValueError):
    """Unusable input data: unparseable files, degenerate series."""


class NumericalError(QuackError, RuntimeError):
    """A numerical routine failed beyond recovery (e.g. Cholesky breakdown)."""
