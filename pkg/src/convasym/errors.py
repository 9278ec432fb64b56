"""Exception hierarchy shared by all modules.

The CLI maps these onto exit codes, so every numerical failure mode has its
own class rather than a bare ``ValueError``.
"""

from __future__ import annotations


class ConvAsymError(Exception):
    """Base class for all package errors."""

    exit_code = 3


class InvalidInputError(ConvAsymError, ValueError):
    exit_code = 2


class DomainError(InvalidInputError):
    """Argument outside the documented domain of an operation."""


class ResourceLimitError(ConvAsymError):
    """A grid or enumeration would exceed the configured size cap."""


class OverflowRangeError(ConvAsymError):
    """exp(|Im k| b) would leave the binary64 range."""


class LineVanishingError(ConvAsymError):
    """1 - ft(d, k) (nearly) vanishes on the line Im k = -c."""

    exit_code = 4


class BoundaryTooCloseError(ConvAsymError):
    """A contour passes too close to a zero for a reliable winding count."""


class RefinementFailedError(ConvAsymError):
    """Newton iteration did not converge."""


class OutsideRegionError(ConvAsymError):
    """Laplace parameter outside the region where the log series converges."""


class IncompleteEnumerationError(ConvAsymError):
    """Subdivision budget exhausted; ``partial`` holds what was found."""

    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = list(partial or [])
