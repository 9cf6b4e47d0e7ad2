"""Exception types shared across modules."""
from __future__ import annotations


class GpjsccError(Exception):
    """Base class for toolkit errors."""


class ParseError(GpjsccError, ValueError):
    """Malformed protomatrix or configuration input."""


class NoThresholdError(GpjsccError):
    """A threshold scan ended without a converged point."""


class UnencodableError(GpjsccError):
    """The non-source block of a lifted matrix is singular."""


class SearchExhaustedError(GpjsccError):
    """No candidate met the benchmark gates.

    Attributes:
        nearest: best-effort nearest miss, or ``None``.
    """

    def __init__(self, message: str, nearest=None):
        super().__init__(message)
        self.nearest = nearest
