"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: ConfigError -> 1, DataError -> 2,
anything else (including InvariantError) -> 3.
"""


class KeybeamError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(KeybeamError):
    """Invalid or inconsistent configuration (bad flag values, k > V, ...)."""


class DataError(KeybeamError):
    """Malformed input data (bad JSONL line, duplicate id, bad dictionary)."""


class InvariantError(KeybeamError):
    """An internal invariant was violated; indicates a bug, not bad input."""
