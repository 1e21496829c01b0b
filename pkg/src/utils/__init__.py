"""Utility functions and helpers."""

from .errors import (
    BracketError,
    ConvergenceError,
    DomainError,
    FixtureError,
    PlateToneError,
    PoleError,
    RangeError,
)
from .logger import LogContext, StructuredLogger, setup_logging
from .parallel import parallel_map

__all__ = [
    "BracketError",
    "ConvergenceError",
    "DomainError",
    "FixtureError",
    "LogContext",
    "PlateToneError",
    "PoleError",
    "RangeError",
    "StructuredLogger",
    "parallel_map",
    "setup_logging",
]
