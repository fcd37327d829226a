"""Exception hierarchy shared by every module."""


class QrseError(Exception):
    """Base class for all errors raised by the package."""


class SchemaError(QrseError):
    """Input file does not match the expected column layout."""


class DataValueError(QrseError, ValueError):
    """A value in the input violates a domain invariant (e.g. a negative price)."""


class InsufficientDataError(QrseError):
    """Not enough observations for the requested computation."""


class ParameterError(QrseError, ValueError):
    """A numeric argument lies outside its valid range."""


class GridCoverageError(QrseError):
    """Return grid does not cover the sample or the model support."""


class AlignmentError(QrseError):
    """Two distributions were defined on different grids."""


class GapError(QrseError):
    """A date has no asset with complete data for index construction."""


class DegenerateError(QrseError):
    """Input is degenerate (constant series, single occupied bin, ...)."""
