"""Exception types shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, DataFormatError and
DimensionMismatch -> 3, NumericalError -> 4.
"""


class SartreError(Exception):
    pass


class ConfigError(SartreError, ValueError):
    """Invalid configuration value, flag combination, or config-file key."""


class DataFormatError(SartreError, ValueError):
    """Malformed input file; message carries file/line diagnostics."""


class DimensionMismatch(SartreError, ValueError):
    """Operands describe different variable counts or sample counts."""


class NumericalError(SartreError, RuntimeError):
    """A numerical routine failed beyond its recovery schedule."""
