"""
Exceptions raised by django_compressive_tactile.

Every library error derives from ``TactileError``. Management commands map the
hierarchy onto process exit codes: ``ConfigError`` exits with 1, data errors
with 2 and ``NumericError`` with 3.
"""


class TactileError(Exception):
    """Base class for all errors raised by this package."""
    pass


class ConfigError(TactileError, ValueError):
    """Raised when a configuration value or command option is invalid."""
    pass


class FormatError(TactileError):
    """Raised when a .tfr/.tdl/.tms/.tsrc file is malformed or unsupported."""
    pass


class DimensionMismatchError(TactileError, ValueError):
    """Raised when frames, dictionaries or operators disagree on shape."""
    pass


class InsufficientDataError(TactileError, ValueError):
    """Raised when an operation has too little input to work with."""
    pass


class NoContactError(TactileError):
    """Raised when a stream ends without any measurement above the contact threshold."""
    pass


class ZeroForceError(TactileError, ValueError):
    """Raised when a center of pressure is requested for a frame with no force."""
    pass


class NumericError(TactileError, ArithmeticError):
    """Raised on non-finite input or numerical breakdown."""
    pass
