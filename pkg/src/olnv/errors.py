"""Exception types shared across the package.

The CLI maps these onto exit codes (config 2, data 3, solver 4).
"""


class OlnvError(Exception):
    """Base class for package errors."""


class ConfigError(OlnvError):
    """Invalid experiment or algorithm configuration."""


class DataError(OlnvError):
    """Malformed, corrupted, or inconsistent input data."""


class SolverError(OlnvError):
    """The linear-programming backend failed to produce a usable solution."""
