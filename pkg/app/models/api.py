"""Request and response payloads for the HTTP surface."""

from typing import List, Literal, Optional

from pydantic import BaseModel, Field, model_validator

from app.models.circuit import CircuitSpec
from app.models.metrics import BulkFitReport, HeatMapSummary, SpectrumSummary


class SamplePayload(BaseModel):
    """Either inline bit strings or a path readable by the server."""

    bitstrings: Optional[List[str]] = None
    path: Optional[str] = None
    expected_n: Optional[int] = Field(default=None, ge=1)
    label: str = ""

    @model_validator(mode="after")
    def exactly_one_source(self) -> "SamplePayload":
        if (self.bitstrings is None) == (self.path is None):
            raise ValueError("provide exactly one of 'bitstrings' or 'path'")
        return self


class XebRequest(BaseModel):
    sample: SamplePayload
    ideal_path: Optional[str] = None
    circuit: Optional[CircuitSpec] = None

    @model_validator(mode="after")
    def exactly_one_ideal(self) -> "XebRequest":
        if (self.ideal_path is None) == (self.circuit is None):
            raise ValueError("provide exactly one of 'ideal_path' or 'circuit'")
        return self


class NistRequest(BaseModel):
    sample: SamplePayload
    alpha: float = Field(default=0.01, gt=0.0, lt=1.0)


class HeatMapRequest(BaseModel):
    sample: SamplePayload
    include_sliced: bool = True


class HeatMapResponse(BaseModel):
    summary: HeatMapSummary
    per_qubit_mean: List[float]
    sliced_mean: Optional[List[List[float]]] = None
    warnings: List[str] = Field(default_factory=list)


class SpectrumRequest(BaseModel):
    sample: SamplePayload
    k: Optional[int] = Field(default=None, ge=1)
    estimator: Optional[Literal["median", "mean"]] = None
    fit: bool = True


class SpectrumResponse(BaseModel):
    summary: SpectrumSummary
    fit: Optional[BulkFitReport] = None
    fit_error: Optional[str] = None
    bulk_histogram: List[float]
    bin_edges: List[float]


class WassersteinRequest(BaseModel):
    a: SamplePayload
    b: SamplePayload
    alpha: float = Field(default=1.0, ge=1.0)
    length_policy: Optional[Literal["truncate", "subsample"]] = None
    backend: Optional[Literal["order-statistic", "pot"]] = None


class SimulateRequest(BaseModel):
    circuit: CircuitSpec
    samples: int = Field(default=0, ge=0)
    sample_seed: int = Field(default=0, ge=0)
    include_probabilities: bool = False


class SimulateResponse(BaseModel):
    n: int
    m: int
    gates: int
    porter_thomas_ks: float
    phase_ks: float
    probabilities: Optional[List[float]] = None
    bitstrings: Optional[List[str]] = None
