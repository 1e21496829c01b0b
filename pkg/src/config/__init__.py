"""Configuration package for plate_tone."""

from .settings import (
    BoundsConfig,
    Command,
    OracleConfig,
    OutputFormat,
    ParallelConfig,
    QuadratureConfig,
    RootConfig,
    RunConfig,
    Settings,
)

__all__ = [
    "BoundsConfig",
    "Command",
    "OracleConfig",
    "OutputFormat",
    "ParallelConfig",
    "QuadratureConfig",
    "RootConfig",
    "RunConfig",
    "Settings",
]
