"""Configuration management for RCS Verify."""

import math
from functools import lru_cache
from typing import Any

import structlog
from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

logger = structlog.get_logger()

GIB = 1024**3


class Settings(BaseSettings):
    """Application settings with validation."""

    model_config = SettingsConfigDict(
        env_file=".env", env_file_encoding="utf-8", case_sensitive=True, extra="ignore"
    )

    # Application
    APP_NAME: str = "RCS Verify"
    APP_VERSION: str = "1.0.0"
    ENVIRONMENT: str = Field(
        default="development", pattern="^(development|staging|production)$"
    )
    SERVICE_NAME: str = "rcs-verify"
    SERVICE_PORT: int = 8010

    # Reproducibility and workers
    DEFAULT_SEED: int = Field(default=0, ge=0)
    WORKER_THREADS: int = Field(default=4, ge=1, le=256)

    # Sample store
    MAX_SAMPLE_BYTES: int = Field(default=2 * GIB, ge=1)
    STREAM_BLOCK_ROWS: int = Field(default=100_000, ge=1)
    # Server-side paths named in HTTP requests must resolve inside this directory
    DATA_ROOT: str = "/data"

    # Circuit engine
    SIMULATOR_MAX_QUBITS: int = Field(default=24, ge=1)
    HAAR_MAX_DIM: int = Field(default=4096, ge=1)
    FSIM_THETA: float = math.pi / 2
    FSIM_PHI: float = math.pi / 6
    ENFORCE_NO_REPEAT: bool = True
    DEFAULT_TOPOLOGY: str = Field(default="ring", pattern="^(ring|grid)$")
    DEFAULT_PATTERN: str = Field(default="ABCDCDAB", pattern="^[ABCD]+$")
    UNITARY_TOL: float = 1e-10

    # Randomness tests
    NIST_ALPHA: float = Field(default=0.01, gt=0.0, lt=1.0)
    NIST_MIN_STREAM_BITS: int = Field(default=10_000, ge=1)
    NIST_BLOCK_SIZE: int = Field(default=128, ge=2)
    NIST_APEN_M: int = Field(default=2, ge=1)

    # Spectral analysis
    SLICE_FACTOR: int = Field(default=2, ge=1)
    OUTLIER_ESTIMATOR: str = Field(default="median", pattern="^(median|mean)$")
    HISTOGRAM_BINS: str = "fd"
    EIGEN_RESIDUAL_TOL: float = 1e-8
    TRACE_TOL: float = 1e-8
    SPECTRUM_CHUNK_SLICES: int = Field(default=512, ge=1)
    MP_EDGE_TOLERANCE: str = Field(default="tracy-widom", pattern="^(tracy-widom|none)$")

    # Transport metrics
    WASSERSTEIN_BACKEND: str = Field(
        default="order-statistic", pattern="^(order-statistic|pot)$"
    )
    WASSERSTEIN_LENGTH_POLICY: str = Field(
        default="truncate", pattern="^(truncate|subsample)$"
    )

    # Reports
    REPORT_SCHEMA_VERSION: str = "1.0"

    # Logging
    LOG_LEVEL: str = Field(
        default="INFO", pattern="^(DEBUG|INFO|WARNING|ERROR|CRITICAL)$"
    )
    LOG_FORMAT: str = Field(default="json", pattern="^(json|plain)$")

    # Monitoring
    ENABLE_METRICS: bool = True

    @field_validator("HISTOGRAM_BINS", mode="before")
    @classmethod
    def parse_histogram_bins(cls, v: Any) -> str:
        value = str(v).strip()
        if value.isdigit() and int(value) > 0:
            return value
        if value in {"fd", "auto", "sturges", "doane", "scott", "rice", "sqrt"}:
            return value
        raise ValueError(f"Unsupported histogram binning rule: {value}")

    def is_production(self) -> bool:
        """Check if running in production."""
        return self.ENVIRONMENT == "production"

    def is_development(self) -> bool:
        """Check if running in development."""
        return self.ENVIRONMENT == "development"

    def validate_configuration(self) -> None:
        """Validate configuration combinations that field constraints cannot express."""
        if self.SIMULATOR_MAX_QUBITS > 30:
            raise ValueError(
                "SIMULATOR_MAX_QUBITS above 30 exceeds dense statevector storage"
            )
        if self.HAAR_MAX_DIM > 2**14:
            raise ValueError("HAAR_MAX_DIM above 16384 exceeds dense matrix storage")
        if self.STREAM_BLOCK_ROWS * 64 > self.MAX_SAMPLE_BYTES:
            logger.warning(
                "Stream block larger than the in-memory sample budget",
                block_rows=self.STREAM_BLOCK_ROWS,
                max_sample_bytes=self.MAX_SAMPLE_BYTES,
            )


@lru_cache()
def get_settings() -> Settings:
    """Get cached settings instance."""
    settings = Settings()
    settings.validate_configuration()
    return settings


# Global settings instance
settings = get_settings()
