"""
Exception hierarchy for the plate_tone toolkit.

Every exception carries a ``context`` dict with the numbers that
triggered it, so that the CLI can serialize a failing record verbatim.
"""

from typing import Any, Dict, Optional


class PlateToneError(Exception):
    """Base class for all toolkit errors."""

    def __init__(self, message: str, **context: Any):
        """
        Initialize error.

        Args:
            message: Human readable message
            **context: Numbers and labels describing the failing evaluation
        """
        super().__init__(message)
        self.context: Dict[str, Any] = context

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary."""
        return {
            "error_type": type(self).__name__,
            "error": str(self),
            "context": self.context
        }


class DomainError(PlateToneError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class PoleError(DomainError):
    """Evaluation at a zero of J_nu where a ratio has a pole."""


class RangeError(DomainError):
    """Overflow or underflow outside the supported argument range."""


class BracketError(PlateToneError):
    """A bracket that must contain a root shows no sign change."""


class ConvergenceError(PlateToneError):
    """An iteration reached its cap without meeting its tolerance."""

    def __init__(
        self,
        message: str,
        iterations: int,
        residual: Optional[float] = None,
        **context: Any
    ):
        super().__init__(message, iterations=iterations, residual=residual, **context)
        self.iterations = iterations
        self.residual = residual


class FixtureError(PlateToneError):
    """Inconsistent fixture inputs or a failed fixture self-check."""
