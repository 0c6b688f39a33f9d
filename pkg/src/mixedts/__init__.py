"""Mixed Tempered Stable distributions: transforms, moments, tails, sampling and estimation."""
from .cts import CtsParams
from .errors import (
    DegenerateWindowError,
    DomainError,
    InsufficientDataError,
    MixedTSError,
    NumericalError,
    UnsupportedParameterError,
)
from .multivariate import MarginalParams, MultivariateParams
from .univariate import StripCase, StripResult, TailExponents, UnivariateParams

__version__ = "0.1.0"

__all__ = [
    "CtsParams",
    "UnivariateParams",
    "MarginalParams",
    "MultivariateParams",
    "StripCase",
    "StripResult",
    "TailExponents",
    "MixedTSError",
    "DomainError",
    "UnsupportedParameterError",
    "InsufficientDataError",
    "DegenerateWindowError",
    "NumericalError",
    "__version__",
]
