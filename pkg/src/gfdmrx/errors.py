"""Exception types raised across the package."""


class GfdmError(Exception):
    """Base class for package errors."""


class ConfigError(GfdmError, ValueError):
    """Invalid parameters or configuration."""


class SingularWindowError(GfdmError, ArithmeticError):
    """A window entry is too small to invert."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class SingularChannelError(GfdmError, ArithmeticError):
    """A frequency-domain channel bin is too small for zero forcing."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index
