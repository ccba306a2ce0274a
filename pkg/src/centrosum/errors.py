"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes: validation errors exit 2,
data errors exit 3, numeric errors exit 4.
"""


class CentrosumError(Exception):
    """Base class for all package errors."""


class ValidationError(CentrosumError):
    """Invalid configuration or arguments (bad flag values, missing inputs)."""


class DataError(CentrosumError):
    """Malformed or inconsistent input data (files, clusters, indices)."""


class NumericError(CentrosumError):
    """Degenerate numeric state (zero-norm vectors, non-finite values)."""
