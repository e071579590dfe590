"""Exception types shared across the toolkit."""


class RadsynthError(Exception):
    """Base class for all toolkit errors."""


class DomainError(RadsynthError, ValueError):
    """An argument is outside the domain an operation accepts."""


class SchemaError(RadsynthError, ValueError):
    """A structured record is missing or has a malformed field."""


class ParseError(RadsynthError, ValueError):
    """A text input could not be parsed.

    Attributes:
        line: 1-based line number of the offending line, if known.
    """

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ConfigError(RadsynthError, ValueError):
    """A dataset configuration is internally inconsistent."""
