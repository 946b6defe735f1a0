"""Exception types shared across the package."""


class ShapeError(ValueError):
    """Operand dimensions do not match an operation's contract."""


class ConfigError(ValueError):
    """Invalid configuration value (window size, crop size, ...)."""


class NumericError(ArithmeticError):
    """Non-finite values or a failed numerical check."""


class FormatError(ValueError):
    """Malformed file: bad magic, truncation, unsupported version."""
