"""
Configuration management for plate_tone.

Numerical tolerances, mesh sizes and worker counts live here as validated
dataclasses. Configuration can be loaded from environment variables, from
a dictionary, or (for the CLI) from a flat JSON document validated by
``RunConfig``.
"""

import hashlib
import json
import os
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Any, Dict, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

# Open interval of supported dimensions, N in (1, 4)
N_MIN = 1.0
N_MAX = 4.0


class Command(str, Enum):
    """CLI command."""
    CERTIFY_BOUNDS = "certify-bounds"
    N0 = "n0"
    REDUCTION = "reduction"
    ORACLE = "oracle"
    CONE = "cone"
    REARRANGE_VERIFY = "rearrange-verify"
    ROOTS = "roots"
    IDENTITY = "identity"
    REPORT_ALL = "report-all"


class OutputFormat(str, Enum):
    """Report serialization format."""
    JSON = "json"
    CSV = "csv"


@dataclass
class RootConfig:
    """Root refinement: bisection down to a bracket width, then Newton."""

    bisection_width: float = 1e-6
    newton_max_iterations: int = 60
    tolerance: float = 1e-10

    def __post_init__(self):
        """Validate configuration values."""
        if self.bisection_width <= 0:
            raise ValueError("bisection_width must be positive")
        if self.newton_max_iterations < 1:
            raise ValueError("newton_max_iterations must be at least 1")
        if not 0 < self.tolerance < self.bisection_width:
            raise ValueError("tolerance must be positive and below bisection_width")


@dataclass
class QuadratureConfig:
    """Adaptive Gauss-Kronrod settings for radial integrals."""

    epsabs: float = 1e-13
    epsrel: float = 1e-12
    limit: int = 200

    def __post_init__(self):
        """Validate configuration values."""
        if self.epsabs <= 0 or self.epsrel <= 0:
            raise ValueError("epsabs and epsrel must be positive")
        if self.limit < 50:
            raise ValueError("limit must be at least 50")


@dataclass
class OracleConfig:
    """Inverse-iteration settings of the finite-difference oracle; the mesh size is a run parameter."""

    max_iterations: int = 1000
    tolerance: float = 1e-10

    def __post_init__(self):
        """Validate configuration values."""
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")


@dataclass
class BoundsConfig:
    """Certification scan settings."""

    scan_points: int = 4096
    k_max: int = 200

    def __post_init__(self):
        """Validate configuration values."""
        if self.scan_points < 16:
            raise ValueError("scan_points must be at least 16")
        if self.k_max < 2:
            raise ValueError("k_max must be at least 2")


@dataclass
class ParallelConfig:
    """Worker pool size for sweeps."""

    workers: int = 1

    def __post_init__(self):
        """Validate configuration values."""
        if self.workers < 1:
            raise ValueError("workers must be at least 1")


@dataclass
class Settings:
    """Main application settings."""

    roots: RootConfig = field(default_factory=RootConfig)
    quadrature: QuadratureConfig = field(default_factory=QuadratureConfig)
    oracle: OracleConfig = field(default_factory=OracleConfig)
    bounds: BoundsConfig = field(default_factory=BoundsConfig)
    parallel: ParallelConfig = field(default_factory=ParallelConfig)
    log_level: str = "WARNING"

    @classmethod
    def from_env(cls) -> "Settings":
        """
        Load configuration from environment variables.

        Environment variables:
            PLATE_TONE_THREADS: Worker cap for sweeps (default 1)
            PLATE_TONE_LOG_LEVEL: Logging level (DEBUG, INFO, WARNING, ERROR)

        Returns:
            Configured Settings instance

        Raises:
            ValueError: If a variable is not a valid number
        """
        threads = os.environ.get("PLATE_TONE_THREADS", "1")
        try:
            workers = int(threads)
        except ValueError as e:
            raise ValueError(f"Invalid PLATE_TONE_THREADS: {e}")

        return cls(
            parallel=ParallelConfig(workers=workers),
            log_level=os.environ.get("PLATE_TONE_LOG_LEVEL", "WARNING").upper()
        )

    @classmethod
    def from_dict(cls, config_dict: dict) -> "Settings":
        """
        Load configuration from dictionary.

        Args:
            config_dict: Nested dictionary keyed by sub-config name

        Returns:
            Configured Settings instance
        """
        return cls(
            roots=RootConfig(**config_dict.get("roots", {})),
            quadrature=QuadratureConfig(**config_dict.get("quadrature", {})),
            oracle=OracleConfig(**config_dict.get("oracle", {})),
            bounds=BoundsConfig(**config_dict.get("bounds", {})),
            parallel=ParallelConfig(**config_dict.get("parallel", {})),
            log_level=config_dict.get("log_level", "WARNING")
        )

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary."""
        return asdict(self)


class RunConfig(BaseModel):
    """
    Validated CLI run configuration.

    Built from a flat JSON document merged with command-line flags (flags
    win). Every numeric field is checked against the preconditions of the
    operation it feeds before anything is dispatched.
    """

    model_config = ConfigDict(extra="forbid", use_enum_values=False, frozen=True)

    command: Command
    N: Optional[float] = Field(default=None, gt=N_MIN, lt=N_MAX)
    nu: Optional[float] = Field(default=None, gt=-0.5, lt=1.0)
    grid_size: int = Field(default=200, ge=2, le=100_000)
    n: int = Field(default=512, ge=8, le=4096)
    tol: float = Field(default=1e-5, gt=0, lt=1)
    N_lo: Optional[float] = Field(default=None, gt=N_MIN, lt=N_MAX)
    N_hi: Optional[float] = Field(default=None, gt=N_MIN, lt=N_MAX)
    step: float = Field(default=0.01, gt=0, lt=1)
    a: Optional[float] = Field(default=None, gt=0, lt=1)
    avr: float = Field(default=1.0, gt=0, le=1)
    volume: Optional[float] = Field(default=None, gt=0)
    r1: float = Field(default=0.05, ge=0)
    r2: float = Field(default=1.0, gt=0)
    scan_points: int = Field(default=4096, ge=16)
    seed: int = Field(default=0, ge=0)
    profile: Optional[str] = None
    output: Optional[str] = None
    format: OutputFormat = OutputFormat.JSON

    @model_validator(mode="before")
    @classmethod
    def _dimension_from_order(cls, data: Any) -> Any:
        if isinstance(data, dict) and data.get("N") is None and data.get("nu") is not None:
            data = dict(data)
            data["N"] = 2.0 * float(data["nu"]) + 2.0
        return data

    @field_validator("output")
    @classmethod
    def _output_parent_exists(cls, value: Optional[str]) -> Optional[str]:
        if value is None:
            return value
        parent = os.path.dirname(os.path.abspath(value))
        if not os.path.isdir(parent):
            raise ValueError(f"output directory does not exist: {parent}")
        return value

    @field_validator("profile")
    @classmethod
    def _profile_exists(cls, value: Optional[str]) -> Optional[str]:
        if value is not None and not os.path.isfile(value):
            raise ValueError(f"profile file does not exist: {value}")
        return value

    @model_validator(mode="after")
    def _check_ranges(self) -> "RunConfig":
        if self.N_lo is not None and self.N_hi is not None and self.N_lo >= self.N_hi:
            raise ValueError("N_lo must be below N_hi")
        if self.r1 >= self.r2:
            raise ValueError("r1 must be below r2")
        return self

    def config_hash(self) -> str:
        """SHA-256 of the canonical JSON form, excluding the output target."""
        payload = self.model_dump(mode="json", exclude={"output"})
        canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
