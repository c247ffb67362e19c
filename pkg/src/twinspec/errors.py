"""Exception taxonomy shared across the package.

The CLI maps these onto process exit codes: configuration problems exit
with 2, data/shape problems with 3, numeric failures with 4.
"""


class TwinspecError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(TwinspecError):
    """Invalid configuration: bad key, bad value, or an inconsistent combination."""


class DataError(TwinspecError):
    """Unusable input data: file format, sample rate, lengths, silent signals."""


class DimensionError(TwinspecError):
    """Array arguments with incompatible shapes or axis counts."""


class InvariantError(TwinspecError):
    """A value violates a documented structural invariant (e.g. non-unit phase)."""


class StateError(TwinspecError):
    """An operation was invoked in an invalid order (e.g. step before backward)."""


class NumericError(TwinspecError):
    """Non-finite values where finite ones are required."""
