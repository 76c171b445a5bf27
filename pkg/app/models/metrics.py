"""Metric result models."""

from typing import Any, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class XebResult(BaseModel):
    """Linear cross-entropy benchmark fidelity of a sample against an ideal table."""

    fidelity: float = Field(ge=-1.0)
    std_error: float = Field(ge=0.0)
    M: int = Field(ge=1)
    n: int = Field(ge=1)


class TestOutcome(BaseModel):
    """Result of one randomness test on a bit stream."""

    __test__ = False  # not a pytest class

    test_name: str
    statistic: Optional[float] = None
    p_value: Optional[float] = Field(default=None, ge=0.0, le=1.0)
    passed: bool = False
    alpha: float = Field(gt=0.0, lt=1.0)
    skipped: bool = False
    skip_reason: Optional[str] = None
    details: Dict[str, Any] = Field(default_factory=dict)

    @model_validator(mode="after")
    def check_verdict(self) -> "TestOutcome":
        if self.skipped:
            if self.passed or self.p_value is not None:
                raise ValueError("a skipped test carries no p-value and does not pass")
        elif self.p_value is None:
            raise ValueError("a completed test must carry a p-value")
        elif self.passed != (self.p_value >= self.alpha):
            raise ValueError("passed must equal p_value >= alpha")
        return self


class ValueSeries(BaseModel):
    """Bit strings mapped to [0, 1) by their integer value over 2^n."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    values: np.ndarray
    n_source: int = Field(ge=1)

    @field_validator("values", mode="before")
    @classmethod
    def validate_values(cls, v: Any) -> np.ndarray:
        arr = np.asarray(v, dtype=np.float64)
        if arr.ndim != 1:
            raise ValueError("values must be a vector")
        if arr.size and (arr.min() < 0.0 or arr.max() >= 1.0):
            raise ValueError("values must lie in [0, 1)")
        if arr.flags.writeable:
            arr = arr.copy()
            arr.setflags(write=False)
        return arr

    @property
    def M(self) -> int:
        return int(self.values.shape[0])


class WassersteinResult(BaseModel):
    """Empirical α-Wasserstein distance between two value series."""

    distance: float = Field(ge=0.0)
    alpha: float = Field(ge=1.0)
    M_used: int = Field(ge=1)
    truncated: bool = False
    length_policy: str = "truncate"
    backend: str = "order-statistic"
    normalization: str = "uniform-1/M"


class HeatMap(BaseModel):
    """Per-qubit and sliced-square averages of outcome 1."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    per_qubit_mean: np.ndarray
    sliced_mean: Optional[np.ndarray] = None
    p1: float = Field(ge=0.0, le=1.0)
    n: int = Field(ge=1)
    M: int = Field(ge=1)
    L: int = Field(default=0, ge=0)
    warnings: List[str] = Field(default_factory=list)

    @property
    def max_column_bias(self) -> float:
        return float(np.max(np.abs(self.per_qubit_mean - 0.5)))

    def summary(self) -> "HeatMapSummary":
        return HeatMapSummary(
            p1=self.p1, max_column_bias=self.max_column_bias, n=self.n, M=self.M, L=self.L
        )


class HeatMapSummary(BaseModel):
    p1: float
    max_column_bias: float
    n: int
    M: int
    L: int


class SpectrumResult(BaseModel):
    """Eigenvalues of (1/k)XᵀX over all slices with the outlier statistics."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    eigenvalues: np.ndarray
    outliers: np.ndarray
    bulk: np.ndarray
    bulk_histogram: List[float]
    bin_edges: List[float]
    outlier_peak: float
    mp_distance: float = Field(ge=0.0)
    gamma: float = Field(gt=0.0)
    k: int = Field(ge=1)
    n: int = Field(ge=1)
    slices: int = Field(ge=0)
    estimator: str = "median"
    skipped_slices: List[int] = Field(default_factory=list)
    max_trace_error: float = 0.0
    max_residual: float = 0.0
    near_zero_fraction: float = Field(default=0.0, ge=0.0, le=1.0)

    def summary(self, fit: Optional["BulkFitReport"] = None) -> "SpectrumSummary":
        return SpectrumSummary(
            outlier_peak=self.outlier_peak,
            mp_distance=self.mp_distance,
            gamma=self.gamma,
            k=self.k,
            slices=self.slices,
            estimator=self.estimator,
            near_zero_fraction=self.near_zero_fraction,
            skipped_slices=len(self.skipped_slices),
            ks_bulk=None if fit is None else fit.ks_distance,
            sigma2=None if fit is None else fit.sigma2,
            in_support_fraction=None if fit is None else fit.in_support_fraction,
        )


class SpectrumSummary(BaseModel):
    outlier_peak: float
    mp_distance: float
    gamma: float
    k: int
    slices: int
    estimator: str
    near_zero_fraction: float
    skipped_slices: int
    ks_bulk: Optional[float] = None
    sigma2: Optional[float] = None
    in_support_fraction: Optional[float] = None


class BulkFitReport(BaseModel):
    """Goodness of fit of the bulk eigenvalues to a Marchenko–Pastur law."""

    sigma2: float = Field(gt=0.0)
    gamma: float = Field(gt=0.0, le=1.0)
    lambda_minus: float
    lambda_plus: float
    ks_distance: float = Field(ge=0.0, le=1.0)
    # Fraction inside [lambda_minus, lambda_plus]
    in_support_fraction: float = Field(ge=0.0, le=1.0)
    # Same fraction with both edges widened by edge_margin
    edge_in_support_fraction: float = Field(ge=0.0, le=1.0)
    edge_margin: float = Field(ge=0.0)
    bulk_count: int = Field(ge=1)
