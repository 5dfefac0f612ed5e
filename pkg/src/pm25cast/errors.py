"""Exception taxonomy shared across the package."""


class Pm25CastError(Exception):
    """Base class for all package errors."""


class DataError(Pm25CastError):
    """Raised for malformed input rows or impossible record values."""


class AggregationError(DataError):
    """Raised when six-hourly slots cannot be collapsed to a daily record."""


class RankDeficiencyError(Pm25CastError):
    """Raised when the Jacobian loses full column rank at the current iterate."""


class StratificationError(Pm25CastError):
    """Raised when a stratified sample cannot be drawn from the frame."""
