"""Exception hierarchy shared across the toolkit."""


class LpevalError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(LpevalError):
    """Invalid configuration value. Carries a dotted field path when known."""

    def __init__(self, message, field=None):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


class IngestError(LpevalError):
    """Malformed input data. Carries the 1-based line number when known."""

    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class InvalidPairError(LpevalError):
    """A predictor was asked to score a degenerate pair (u == v)."""


class UnknownNodeError(LpevalError):
    """A node outside the snapshot universe was scored in recommendation mode."""


class DataCorruptionError(LpevalError):
    """An impossible graph state was observed (e.g. a degree-1 common neighbor)."""


class UndefinedMetricError(LpevalError):
    """The requested metric is undefined for this input (e.g. single-class ranking)."""
