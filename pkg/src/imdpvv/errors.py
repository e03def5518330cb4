"""Exception types shared across the package.

The CLI maps these onto exit codes (config 2, data 3, numeric 4).
"""


class ConfigError(ValueError):
    """Invalid or inconsistent configuration."""


class DataError(ValueError):
    """Malformed or inconsistent input data."""


class NumericError(RuntimeError):
    """A numeric routine failed to produce a usable result."""
