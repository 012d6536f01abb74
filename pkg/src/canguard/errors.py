"""Exception types shared across the toolkit."""


class CanGuardError(Exception):
    """Base class for all toolkit-specific errors."""


class SchemaError(CanGuardError):
    """A CSV header is missing or renames a required column."""


class ParseError(CanGuardError):
    """A data cell could not be parsed into the expected type."""


class LabelError(CanGuardError):
    """A label value falls outside the taxonomy or violates closure."""


class ImputationError(CanGuardError):
    """A column is entirely missing, so no fill value exists."""


class SplitError(CanGuardError):
    """A requested train/test split would leave one side empty."""


class ConfigError(CanGuardError):
    """A run or synthesis configuration is invalid."""


class StatsError(CanGuardError):
    """A statistic is undefined for the given input."""


class FitError(CanGuardError):
    """A model or transform cannot be fitted on the given data."""


class NumericError(CanGuardError):
    """A numeric routine produced or detected non-finite results."""


class ShapeError(CanGuardError):
    """Input dimensionality does not match the fitted artifact."""


class FormatError(CanGuardError):
    """A serialized document is corrupt or has an unsupported version."""
