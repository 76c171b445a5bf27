"""Sample-set data models."""

from enum import Enum
from typing import Any, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class SampleSource(str, Enum):
    """Where a set of bit strings came from."""

    HARDWARE = "hardware"
    TENSOR_NETWORK = "tensor-network"
    UNIFORM_SYNTHETIC = "uniform-synthetic"
    SPOOF_SYNTHETIC = "spoof-synthetic"
    SIMULATOR = "simulator"


class DatasetDescriptor(BaseModel):
    """Parameters encoded in a dataset filename.

    The hyphen-delimited convention is ``<label>-n<k>-m<k>-s<k>-e<k>-p<pattern>``.
    Keys missing from a name stay unset and ``warning`` is raised.
    """

    filename: str
    label: Optional[str] = None
    n_qubits: Optional[int] = Field(default=None, ge=1)
    m_cycles: Optional[int] = Field(default=None, ge=1)
    seed: Optional[int] = Field(default=None, ge=0)
    elided_gates: Optional[int] = Field(default=None, ge=0)
    pattern: Optional[str] = Field(default=None, pattern="^[ABCD]+$")
    extra: List[str] = Field(default_factory=list)
    warning: bool = False

    @property
    def is_complete(self) -> bool:
        return None not in (
            self.n_qubits,
            self.m_cycles,
            self.seed,
            self.elided_gates,
            self.pattern,
        )


class SampleSet(BaseModel):
    """An immutable M×n matrix of measured bit strings.

    Row i is the i-th record; column j is qubit j. Qubit 0 is the leftmost
    character in the text format and the most significant bit of the
    integer encoding.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    bits: np.ndarray
    label: str = ""
    source: SampleSource = SampleSource.HARDWARE
    descriptor: Optional[DatasetDescriptor] = None

    @field_validator("bits", mode="before")
    @classmethod
    def validate_bits(cls, v: Any) -> np.ndarray:
        arr = np.asarray(v)
        if arr.ndim != 2:
            raise ValueError(f"bits must be a 2-D matrix, got {arr.ndim} dimensions")
        if arr.shape[0] < 1:
            raise ValueError("no records")
        if arr.shape[1] < 1:
            raise ValueError("bit strings must hold at least one bit")
        if arr.dtype != np.uint8:
            if not np.isin(arr, (0, 1)).all():
                raise ValueError("bits must be 0 or 1")
            arr = arr.astype(np.uint8)
        elif arr.max() > 1:
            raise ValueError("bits must be 0 or 1")
        arr = np.ascontiguousarray(arr)
        if arr.flags.writeable:
            arr = arr.copy()
            arr.setflags(write=False)
        return arr

    @model_validator(mode="after")
    def check_descriptor(self) -> "SampleSet":
        d = self.descriptor
        if d is not None and d.n_qubits is not None and d.n_qubits != self.n:
            raise ValueError(
                f"descriptor declares {d.n_qubits} qubits but records hold {self.n} bits"
            )
        return self

    @property
    def n(self) -> int:
        return int(self.bits.shape[1])

    @property
    def M(self) -> int:
        return int(self.bits.shape[0])

    def head(self, M: int) -> "SampleSet":
        """First M records as a new sample set."""
        if M < 1:
            raise ValueError("M must be at least 1")
        if M >= self.M:
            return self
        return self.model_copy(update={"bits": self.bits[:M]})

    def to_indices(self) -> np.ndarray:
        """Integer value of every row, qubit 0 most significant."""
        if self.n > 63:
            raise ValueError("integer encoding supports at most 63 qubits")
        weights = np.left_shift(
            np.int64(1), np.arange(self.n - 1, -1, -1, dtype=np.int64)
        )
        return self.bits.astype(np.int64) @ weights

    def stream(self) -> np.ndarray:
        """Row-major concatenation of every bit."""
        return self.bits.reshape(-1)

    def __eq__(self, other: object) -> bool:
        # Records define identity; label, source and descriptor are provenance.
        if not isinstance(other, SampleSet):
            return NotImplemented
        return self.bits.shape == other.bits.shape and bool(
            np.array_equal(self.bits, other.bits)
        )

    def __hash__(self) -> int:
        return hash((self.bits.shape, self.bits.tobytes()))
