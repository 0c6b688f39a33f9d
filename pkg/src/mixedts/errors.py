"""Exception types raised across the package."""


class MixedTSError(Exception):
    """Base class for package errors."""


class DomainError(MixedTSError, ValueError):
    """Argument lies outside the region where a transform is finite."""


class UnsupportedParameterError(MixedTSError, ValueError):
    """Parameter value excluded from the closed-form formulas (alpha = 1, alpha = 2)."""


class InsufficientDataError(MixedTSError, ValueError):
    """Too few observations for the requested statistic."""


class DegenerateWindowError(MixedTSError, ValueError):
    """All abscissae in a regression window coincide."""


class NumericalError(MixedTSError, RuntimeError):
    """A numerical routine failed where theory guarantees success."""
