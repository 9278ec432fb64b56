"""Numerical tools for convolution series of compactly supported densities,
the zeros of their characteristic functions, and finite-p nonresidue counts."""

from .density import Density, burgess, make_density, moments, uniform, validate
from .errors import (
    BoundaryTooCloseError,
    ConvAsymError,
    DomainError,
    IncompleteEnumerationError,
    InvalidInputError,
    LineVanishingError,
    OutsideRegionError,
    OverflowRangeError,
    RefinementFailedError,
    ResourceLimitError,
)
from .quadrature import DEFAULT_QUAD, QuadratureSpec

__all__ = [
    "Density",
    "burgess",
    "make_density",
    "moments",
    "uniform",
    "validate",
    "QuadratureSpec",
    "DEFAULT_QUAD",
    "ConvAsymError",
    "InvalidInputError",
    "DomainError",
    "ResourceLimitError",
    "OverflowRangeError",
    "LineVanishingError",
    "BoundaryTooCloseError",
    "RefinementFailedError",
    "OutsideRegionError",
    "IncompleteEnumerationError",
]
__version__ = "0.1.0"
