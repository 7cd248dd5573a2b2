"""Exception types shared across the package."""


class MetricsError(Exception):
    """Base class for all errors raised by this package."""


class NormalizationError(MetricsError):
    """A type text or method name could not be normalized."""


class ModelError(MetricsError):
    """A code model violates a structural invariant (duplicates, cycles)."""


class DomainError(MetricsError):
    """An operation was applied to the wrong kind of type or an unknown one."""


class ParseError(MetricsError):
    """Java source could not be scanned."""


class SchemaError(MetricsError):
    """A model JSON document violates the schema.

    ``pointer`` holds the JSON pointer of the offending node.
    """

    def __init__(self, pointer: str, message: str) -> None:
        super().__init__(f"{message} at {pointer}")
        self.pointer = pointer


class ConfigError(MetricsError):
    """Invalid run configuration (bad threshold, empty inputs, ...)."""
