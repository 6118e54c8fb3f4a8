"""Exception types raised by the framework."""


class BrkgaError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(BrkgaError, ValueError):
    pass


class InvalidParameterError(BrkgaError, ValueError):
    pass


class NotEvaluatedError(BrkgaError):
    pass


class ConfigError(BrkgaError, ValueError):
    """Raised when a parameter set has hard violations.

    ``violations`` holds the offending :class:`brkga.params.Violation` items.
    """

    def __init__(self, message, violations=()):
        super().__init__(message)
        self.violations = list(violations)


class DecodeError(BrkgaError):
    """A decoder failed on a specific chromosome."""

    def __init__(self, message, index=None, keys=None):
        super().__init__(message)
        self.index = index
        self.keys = keys


class LayoutError(BrkgaError, ValueError):
    pass


class EncodeError(BrkgaError, ValueError):
    pass


class ParseError(BrkgaError, ValueError):
    def __init__(self, message, path=None, line=None):
        loc = ""
        if path is not None:
            loc = f"{path}:"
        if line is not None:
            loc += f"{line}:"
        super().__init__(f"{loc} {message}" if loc else message)
        self.path = path
        self.line = line
