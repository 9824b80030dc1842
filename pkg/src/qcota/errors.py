"""Exception types shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, DataError -> 3,
RuntimeError (non-convergence guard) -> 4.
"""


class ConfigError(ValueError):
    """A run/sweep/synthetic configuration is malformed or inconsistent."""


class DataError(ValueError):
    """A dataset file fails to parse or violates the expected schema."""
