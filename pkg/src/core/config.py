"""
Configuration management for the stratification toolkit.

This module handles loading and validating environment variables and
configuration settings using Pydantic for robust validation and error
handling. Runtime settings come from ``STRATA_*`` environment variables (or
a ``.env`` file); per-invocation CLI settings are validated by ``RunConfig``,
which reads flat ``key=value`` files through python-dotenv.
"""

import os
from typing import Any, Dict, List, Optional

from dotenv import dotenv_values, load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError as PydanticValidationError, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from .exceptions import ConfigurationError

# Load environment variables from .env file
load_dotenv()


# Angular product-rule order per dimension; higher dimensions fall back to 4.
DEFAULT_ANGULAR_ORDER = {2: 32, 3: 16, 4: 8, 5: 6, 6: 5}


class QuadratureConfig(BaseSettings):
    """Quadrature rule configuration with validation."""

    radial_nodes: int = Field(default=64, description="Gauss-Legendre nodes on the innermost radial segment")
    angular_order: Optional[int] = Field(default=None, description="Polar-angle order of the spherical product rule")
    skip_capped: bool = Field(default=True, description="Skip capped singular cells in grid quadrature")
    min_ball_cells: int = Field(default=50, description="Minimum grid cells inside a ball")
    estimate_tolerance: bool = Field(default=True, description="Attach an N versus 2N tolerance to every value")
    chunk_nodes: int = Field(default=250_000, description="Maximum quadrature nodes evaluated at once")

    @field_validator('radial_nodes')
    @classmethod
    def validate_radial_nodes(cls, v):
        """Validate the radial node count."""
        if not 4 <= v <= 1024:
            raise ValueError(f'Radial nodes must be between 4 and 1024, got: {v}')
        return v

    @field_validator('angular_order')
    @classmethod
    def validate_angular_order(cls, v):
        """Validate the angular order."""
        if v is not None and not 2 <= v <= 128:
            raise ValueError(f'Angular order must be between 2 and 128, got: {v}')
        return v

    @field_validator('min_ball_cells')
    @classmethod
    def validate_min_ball_cells(cls, v):
        """Validate the minimum cell count."""
        if v < 1:
            raise ValueError(f'Minimum ball cells must be positive, got: {v}')
        return v

    @field_validator('chunk_nodes')
    @classmethod
    def validate_chunk_nodes(cls, v):
        """Validate the evaluation chunk size."""
        if v < 1000:
            raise ValueError(f'Chunk size must be at least 1000 nodes, got: {v}')
        return v

    def angular_order_for(self, n: int) -> int:
        """Angular order used in dimension n."""
        if self.angular_order is not None:
            return self.angular_order
        return DEFAULT_ANGULAR_ORDER.get(n, 4)

    def refined(self) -> "QuadratureConfig":
        """Settings with doubled radial nodes and a finer angular rule, for tolerance estimates."""
        return self.model_copy(update={
            "radial_nodes": 2 * self.radial_nodes,
            "angular_order": None if self.angular_order is None else self.angular_order + max(2, self.angular_order // 2),
            "estimate_tolerance": False,
        })

    model_config = SettingsConfigDict(
        env_prefix="STRATA_QUAD_",
        env_file=".env",
        case_sensitive=False,
        extra="ignore"
    )


class CoverConfig(BaseSettings):
    """Covering construction configuration with validation."""

    rho: float = Field(default=1.0 / 128.0, description="Child-to-parent radius ratio")
    sample_factor: int = Field(default=200, description="Ball samples per 2^n")
    refine_steps: int = Field(default=1, description="Local grid-search passes around the sampled maximizer")
    skeleton_spacing: float = Field(default=0.25, description="Singular-set seed spacing relative to r")

    @field_validator('rho')
    @classmethod
    def validate_rho(cls, v):
        """Validate rho against the required bound."""
        if not 0.0 < v < 0.01:
            raise ValueError(f'rho must lie in (0, 1/100), got: {v}')
        return v

    @field_validator('sample_factor')
    @classmethod
    def validate_sample_factor(cls, v):
        """Validate the sample factor."""
        if v < 1:
            raise ValueError(f'Sample factor must be positive, got: {v}')
        return v

    @field_validator('skeleton_spacing')
    @classmethod
    def validate_skeleton_spacing(cls, v):
        """Validate the skeleton spacing."""
        if not 0.0 < v <= 1.0:
            raise ValueError(f'Skeleton spacing must lie in (0, 1], got: {v}')
        return v

    model_config = SettingsConfigDict(
        env_prefix="STRATA_COVER_",
        env_file=".env",
        case_sensitive=False,
        extra="ignore"
    )


class RuntimeConfig(BaseSettings):
    """Process-level runtime configuration."""

    threads: Optional[int] = Field(default=None, description="Worker cap (STRATA_THREADS)")
    log_level: str = Field(default="WARNING", description="Root log level for the CLI")
    cache_size: int = Field(default=256, description="Maximum entries in the density cache")

    @field_validator('threads')
    @classmethod
    def validate_threads(cls, v):
        """Validate the worker cap."""
        if v is not None and v < 1:
            raise ValueError(f'Thread count must be positive, got: {v}')
        return v

    @field_validator('log_level')
    @classmethod
    def validate_log_level(cls, v):
        """Validate log level."""
        allowed = ['DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL']
        if v.upper() not in allowed:
            raise ValueError(f'Log level must be one of {allowed}, got: {v}')
        return v.upper()

    @field_validator('cache_size')
    @classmethod
    def validate_cache_size(cls, v):
        """Validate cache size."""
        if not 1 <= v <= 100_000:
            raise ValueError(f'Cache size must be between 1 and 100000, got: {v}')
        return v

    def worker_count(self) -> int:
        """Effective number of worker threads."""
        return self.threads or os.cpu_count() or 1

    model_config = SettingsConfigDict(
        env_prefix="STRATA_",
        env_file=".env",
        case_sensitive=False,
        extra="ignore"
    )


class Config(BaseSettings):
    """Main configuration class aggregating the settings groups."""

    debug: bool = Field(default=False, description="Debug mode")

    # Nested configurations (initialized in __init__)
    quadrature: Optional[QuadratureConfig] = None
    cover: Optional[CoverConfig] = None
    runtime: Optional[RuntimeConfig] = None

    model_config = SettingsConfigDict(
        env_prefix="STRATA_",
        env_file=".env",
        case_sensitive=False,
        extra="ignore"
    )

    def __init__(self, **kwargs):
        """Initialize configuration with validation."""
        super().__init__(**kwargs)
        self._load_nested_configs()

    def _load_nested_configs(self):
        """Load and validate nested configuration objects."""
        try:
            self.quadrature = QuadratureConfig()
        except Exception as e:
            raise ConfigurationError("quadrature", str(e), technical_details=str(e))

        try:
            self.cover = CoverConfig()
        except Exception as e:
            raise ConfigurationError("cover", str(e), technical_details=str(e))

        try:
            self.runtime = RuntimeConfig()
        except Exception as e:
            raise ConfigurationError("runtime threads", str(e), technical_details=str(e))


class RunConfig(BaseModel):
    """
    Validated parameters of one CLI invocation.

    Every field can come from a flat key=value config file or from a flag;
    flags win. The full set of effective values is embedded in each report.
    """

    model_config = ConfigDict(extra="forbid")

    # Field source
    field: Optional[str] = Field(default=None, description="Path to a field JSON file")
    kind: str = Field(default="power_law", description="Inline analytic field kind")
    n: int = Field(default=5, description="Spatial dimension")
    p: float = Field(default=2.5, description="Nonlinearity exponent")
    m: int = Field(default=0, description="Invariant-direction count")
    center: Optional[List[float]] = Field(default=None, description="Singular plane base point")
    frame: Optional[List[List[float]]] = Field(default=None, description="Invariant frame rows")
    c0: Optional[float] = Field(default=None, description="Override of the power-law constant")

    # Command parameters
    x: Optional[List[float]] = Field(default=None, description="Probe point or root center")
    eps: float = Field(default=0.1, description="Symmetry threshold")
    r: float = Field(default=0.0625, description="Terminal scale")
    r_min: float = Field(default=0.0625, description="Smallest dyadic scale")
    R: float = Field(default=1.0, description="Root scale")
    radii: Optional[List[float]] = Field(default=None, description="Radii for density scans")
    k: int = Field(default=0, description="Stratum or subspace dimension")
    j: int = Field(default=0, description="Derivative order")
    rho: float = Field(default=1.0 / 128.0, description="Covering radius ratio")
    delta: Optional[float] = Field(default=None, description="Energy pinch (defaults to eps/4)")
    xi: Optional[float] = Field(default=None, description="Stratum tolerance (defaults to eps/4)")
    samples: int = Field(default=64, description="Sample points for strata and covers")
    sample_factor: int = Field(default=200, description="Ball samples per 2^n for covers")
    radial_nodes: int = Field(default=64, description="Radial quadrature nodes")
    angular_order: Optional[int] = Field(default=None, description="Angular quadrature order")
    lambdas: Optional[List[float]] = Field(default=None, description="Level grid for tails")
    box_origin: Optional[List[float]] = Field(default=None, description="Grid box origin for synth")
    box_side: Optional[float] = Field(default=None, description="Grid box side for synth")
    h: Optional[float] = Field(default=None, description="Grid spacing for synth")
    measure: Optional[str] = Field(default=None, description="Path to a measure JSON file")
    radii_file: Optional[str] = Field(default=None, description="Path to explicit ball radii")
    seed: int = Field(default=0, description="Seed for sampled oracles")
    out: str = Field(default="strata_out", description="Output directory")

    @field_validator('eps')
    @classmethod
    def validate_eps(cls, v):
        """Validate the symmetry threshold."""
        if not v > 0:
            raise ValueError(f'eps must be positive, got: {v}')
        return v

    @field_validator('r', 'r_min', 'R', 'rho')
    @classmethod
    def validate_scale(cls, v):
        """Validate that scale parameters are positive."""
        if not v > 0:
            raise ValueError(f'scale parameters must be positive, got: {v}')
        return v

    @field_validator('delta', 'xi', 'box_side', 'h')
    @classmethod
    def validate_optional_positive(cls, v):
        """Validate optional positive parameters."""
        if v is not None and not v > 0:
            raise ValueError(f'value must be positive, got: {v}')
        return v

    @field_validator('radii', 'lambdas')
    @classmethod
    def validate_positive_list(cls, v):
        """Validate lists of positive scales."""
        if v is not None and any(not item > 0 for item in v):
            raise ValueError(f'all entries must be positive, got: {v}')
        return v

    @field_validator('samples', 'sample_factor', 'radial_nodes')
    @classmethod
    def validate_counts(cls, v):
        """Validate sample and node counts."""
        if v < 1:
            raise ValueError(f'counts must be positive, got: {v}')
        return v

    def provenance(self) -> Dict[str, Any]:
        """Every effective value, for embedding in reports."""
        return self.model_dump(mode="json")


_LIST_KEYS = {"center", "x", "radii", "lambdas", "box_origin"}


def _parse_flat_value(key: str, raw: str) -> Any:
    """Parse one flat config value; lists are comma separated, frames are ';' separated rows."""
    raw = raw.strip()
    if key == "frame":
        return [[float(item) for item in row.split(",") if item.strip()] for row in raw.split(";") if row.strip()]
    if key in _LIST_KEYS:
        return [float(item) for item in raw.split(",") if item.strip()]
    return raw


def load_run_config(path: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """
    Build a RunConfig from an optional flat key=value file plus flag overrides.

    Args:
        path: Config file path (python-dotenv syntax), or None
        overrides: Flag values; entries that are None are ignored

    Returns:
        Validated RunConfig

    Raises:
        ConfigurationError: Unreadable file, unknown keys or invalid values
    """
    values: Dict[str, Any] = {}
    if path:
        if not os.path.exists(path):
            raise ConfigurationError("config file", f"file not found: {path}")
        for key, raw in dotenv_values(path).items():
            if raw is None:
                continue
            values[key.strip()] = _parse_flat_value(key.strip(), raw)

    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value

    try:
        return RunConfig(**values)
    except PydanticValidationError as e:
        first = e.errors()[0]
        location = ".".join(str(part) for part in first.get("loc", ())) or "run config"
        raise ConfigurationError(location, first.get("msg", str(e)), technical_details=str(e))


# Global configuration instance
try:
    config = Config()
except Exception as e:
    # If configuration fails, fall back to defaults so imports still work
    import warnings
    warnings.warn(f"Failed to load configuration: {str(e)}")
    config = None


def quadrature_settings() -> QuadratureConfig:
    """Active quadrature settings (defaults when the environment is invalid)."""
    return config.quadrature if config else QuadratureConfig.model_construct()


def cover_settings() -> CoverConfig:
    """Active covering settings."""
    return config.cover if config else CoverConfig.model_construct()


def runtime_settings() -> RuntimeConfig:
    """Active runtime settings."""
    return config.runtime if config else RuntimeConfig.model_construct()
