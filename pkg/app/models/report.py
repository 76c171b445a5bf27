"""Compare-run configuration and the consolidated metric report."""

from pathlib import Path
from typing import Annotated, Dict, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.models.circuit import CircuitSpec, Topology
from app.models.metrics import (
    HeatMapSummary,
    SpectrumSummary,
    TestOutcome,
    XebResult,
)
from app.models.samples import DatasetDescriptor

METRICS = ("xeb", "nist", "heatmap", "spectrum", "wdist")
MetricName = Literal["xeb", "nist", "heatmap", "spectrum", "wdist"]


class _InputBase(BaseModel):
    model_config = ConfigDict(extra="forbid")

    label: Optional[str] = None

    def default_label(self, index: int) -> str:
        return f"{getattr(self, 'kind')}-{index}"

    def resolved_label(self, index: int) -> str:
        return self.label or self.default_label(index)


class FileInput(_InputBase):
    kind: Literal["file"] = "file"
    path: str
    expected_n: Optional[int] = Field(default=None, ge=1)

    def default_label(self, index: int) -> str:
        return Path(self.path).name


class UniformInput(_InputBase):
    kind: Literal["uniform"] = "uniform"
    n: int = Field(ge=1)
    M: int = Field(ge=1)
    seed: int = Field(default=0, ge=0)


class SpoofInput(_InputBase):
    kind: Literal["spoof"] = "spoof"
    n: int = Field(ge=1)
    M: int = Field(ge=1)
    seed: int = Field(default=0, ge=0)
    prefix_len: int = Field(ge=0)
    fixed_value: Literal[0, 1] = 0

    @model_validator(mode="after")
    def check_prefix(self) -> "SpoofInput":
        if self.prefix_len > self.n:
            raise ValueError(f"prefix_len {self.prefix_len} exceeds n = {self.n}")
        return self


class _CircuitFields(BaseModel):
    model_config = ConfigDict(extra="forbid")

    n: int = Field(ge=1)
    m: int = Field(ge=0)
    seed: int = Field(default=0, ge=0)
    pattern: Optional[str] = Field(default=None, pattern="^[ABCD]+$")
    topology: Optional[Topology] = None

    def circuit_spec(self) -> CircuitSpec:
        overrides = {
            key: value
            for key, value in (("pattern", self.pattern), ("topology", self.topology))
            if value is not None
        }
        return CircuitSpec(n_qubits=self.n, m_cycles=self.m, seed=self.seed, **overrides)


class CircuitInput(_CircuitFields, _InputBase):
    """Samples drawn from a simulated circuit, which also serves as its own ideal table."""

    kind: Literal["circuit"] = "circuit"
    M: int = Field(ge=1)
    sample_seed: int = Field(default=0, ge=0)


InputSpec = Annotated[
    Union[FileInput, UniformInput, SpoofInput, CircuitInput], Field(discriminator="kind")
]


class IdealFile(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["file"] = "file"
    path: str


class IdealCircuit(_CircuitFields):
    kind: Literal["circuit"] = "circuit"


IdealSpec = Annotated[Union[IdealFile, IdealCircuit], Field(discriminator="kind")]


class CompareParams(BaseModel):
    """Per-run metric parameters; unset values fall back to settings."""

    model_config = ConfigDict(extra="forbid")

    nist_alpha: float = Field(default=0.01, gt=0.0, lt=1.0)
    wasserstein_alpha: float = Field(default=1.0, ge=1.0)
    k: Optional[int] = Field(default=None, ge=1)
    outlier_estimator: Optional[Literal["median", "mean"]] = None
    reference: Optional[str] = None
    length_policy: Optional[Literal["truncate", "subsample"]] = None
    backend: Optional[Literal["order-statistic", "pot"]] = None
    bulk_fit: bool = True


class CompareConfig(BaseModel):
    """Declarative batch comparison over samples."""

    model_config = ConfigDict(extra="forbid")

    inputs: List[InputSpec] = Field(min_length=1)
    ideal: Optional[IdealSpec] = None
    metrics: List[MetricName] = Field(default_factory=lambda: list(METRICS))
    params: CompareParams = Field(default_factory=CompareParams)
    seed: int = Field(default=0, ge=0)
    workers: Optional[int] = Field(default=None, ge=1)
    include_timestamp: bool = True

    @model_validator(mode="after")
    def check_labels(self) -> "CompareConfig":
        labels = self.labels()
        duplicates = sorted({label for label in labels if labels.count(label) > 1})
        if duplicates:
            raise ValueError(f"duplicate input labels: {duplicates}")
        if self.params.reference is not None and self.params.reference not in labels:
            raise ValueError(f"reference {self.params.reference!r} is not an input label")
        if "xeb" in self.metrics and self.ideal is None and not any(
            isinstance(item, CircuitInput) for item in self.inputs
        ):
            raise ValueError("xeb requires an ideal table or a circuit input")
        return self

    def labels(self) -> List[str]:
        return [item.resolved_label(i) for i, item in enumerate(self.inputs)]


class InputRecord(BaseModel):
    """Provenance of one input: where it came from and what it held."""

    label: str
    kind: str
    spec: Dict[str, object]
    n: Optional[int] = None
    M: Optional[int] = None
    sha256: Optional[str] = None
    descriptor: Optional[DatasetDescriptor] = None


class ReportError(BaseModel):
    input: str
    metric: str
    error: str


class WassersteinInfo(BaseModel):
    alpha: float
    normalization: str = "uniform-1/M"
    backend: str
    length_policy: str
    reference: Optional[str] = None
    truncated_pairs: List[List[str]] = Field(default_factory=list)


class MetricReport(BaseModel):
    """Everything a compare run produced, keyed by input label."""

    schema_version: str
    tool_version: str
    generated_at: Optional[str] = None
    config: Dict[str, object]
    parameters: Dict[str, object]
    inputs: List[InputRecord]
    xeb: Dict[str, XebResult] = Field(default_factory=dict)
    nist: Dict[str, List[TestOutcome]] = Field(default_factory=dict)
    heatmap_summary: Dict[str, HeatMapSummary] = Field(default_factory=dict)
    spectrum_summary: Dict[str, SpectrumSummary] = Field(default_factory=dict)
    wasserstein_matrix: Dict[str, Dict[str, float]] = Field(default_factory=dict)
    wasserstein: Optional[WassersteinInfo] = None
    errors: List[ReportError] = Field(default_factory=list)
