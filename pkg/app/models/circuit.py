"""Circuit, statevector and probability-table models."""

from enum import Enum
from typing import Any, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.core.config import settings

NORM_TOL = 1e-10


class Topology(str, Enum):
    """Qubit coupling layouts available at desk scale."""

    RING = "ring"
    GRID = "grid"


class CircuitSpec(BaseModel):
    """A pseudo-random circuit description."""

    n_qubits: int = Field(ge=1)
    m_cycles: int = Field(ge=0)
    seed: int = Field(default=0, ge=0)
    pattern: str = Field(default_factory=lambda: settings.DEFAULT_PATTERN, pattern="^[ABCD]+$")
    topology: Topology = Field(default_factory=lambda: Topology(settings.DEFAULT_TOPOLOGY))
    grid_shape: Optional[Tuple[int, int]] = None
    no_repeat: bool = Field(default_factory=lambda: settings.ENFORCE_NO_REPEAT)
    fsim_theta: float = Field(default_factory=lambda: settings.FSIM_THETA)
    fsim_phi: float = Field(default_factory=lambda: settings.FSIM_PHI)

    @model_validator(mode="after")
    def check_grid(self) -> "CircuitSpec":
        if self.grid_shape is not None:
            rows, cols = self.grid_shape
            if rows < 1 or cols < 1 or rows * cols != self.n_qubits:
                raise ValueError(
                    f"grid_shape {self.grid_shape} does not hold {self.n_qubits} qubits"
                )
        return self


class GateOp(BaseModel):
    """One gate application inside a gate sequence."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    name: str
    qubits: Tuple[int, ...]
    cycle: int = 0
    matrix: Optional[np.ndarray] = None

    @field_validator("qubits")
    @classmethod
    def validate_qubits(cls, v: Tuple[int, ...]) -> Tuple[int, ...]:
        if len(v) not in (1, 2):
            raise ValueError("gates act on one or two qubits")
        if len(set(v)) != len(v):
            raise ValueError("gate qubits must be distinct")
        if any(q < 0 for q in v):
            raise ValueError("qubit indices must be non-negative")
        return v

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GateOp):
            return NotImplemented
        same_matrix = (self.matrix is None and other.matrix is None) or (
            self.matrix is not None
            and other.matrix is not None
            and bool(np.array_equal(self.matrix, other.matrix))
        )
        return (
            self.name == other.name
            and self.qubits == other.qubits
            and self.cycle == other.cycle
            and same_matrix
        )

    def __hash__(self) -> int:
        return hash((self.name, self.qubits, self.cycle))


def _as_readonly(arr: np.ndarray) -> np.ndarray:
    if arr.flags.writeable:
        arr = arr.copy()
        arr.setflags(write=False)
    return arr


class ProbTable(BaseModel):
    """Dense output distribution over all 2^n bit strings."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    probs: np.ndarray
    n: int = Field(ge=1)

    @field_validator("probs", mode="before")
    @classmethod
    def validate_probs(cls, v: Any) -> np.ndarray:
        arr = np.asarray(v, dtype=np.float64)
        if arr.ndim != 1:
            raise ValueError("probabilities must be a vector")
        if (arr < 0).any():
            raise ValueError("probabilities must be non-negative")
        if abs(float(np.sum(arr)) - 1.0) > NORM_TOL:
            raise ValueError(f"probabilities sum to {float(np.sum(arr))!r}, not 1")
        return _as_readonly(arr)

    @model_validator(mode="after")
    def check_length(self) -> "ProbTable":
        if self.probs.shape[0] != 2**self.n:
            raise ValueError(
                f"table holds {self.probs.shape[0]} entries, expected 2^{self.n}"
            )
        return self

    @property
    def N(self) -> int:
        return 2**self.n

    @classmethod
    def uniform(cls, n: int) -> "ProbTable":
        N = 2**n
        return cls(probs=np.full(N, 1.0 / N), n=n)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ProbTable):
            return NotImplemented
        return self.n == other.n and bool(np.array_equal(self.probs, other.probs))

    def __hash__(self) -> int:
        return hash((self.n, self.probs.tobytes()))


class StateVector(BaseModel):
    """Exact amplitudes of U|0…0⟩."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    amplitudes: np.ndarray
    n: int = Field(ge=1)

    @field_validator("amplitudes", mode="before")
    @classmethod
    def validate_amplitudes(cls, v: Any) -> np.ndarray:
        arr = np.asarray(v, dtype=np.complex128)
        if arr.ndim != 1:
            raise ValueError("amplitudes must be a vector")
        norm = float(np.vdot(arr, arr).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state norm {norm!r} differs from 1")
        return _as_readonly(arr)

    @model_validator(mode="after")
    def check_length(self) -> "StateVector":
        if self.amplitudes.shape[0] != 2**self.n:
            raise ValueError(
                f"state holds {self.amplitudes.shape[0]} amplitudes, expected 2^{self.n}"
            )
        return self

    @property
    def probabilities(self) -> np.ndarray:
        """p_x = |amplitude_x|²."""
        return np.abs(self.amplitudes) ** 2

    @property
    def phases(self) -> np.ndarray:
        """θ_x = arg(amplitude_x) in [−π, π]."""
        return np.angle(self.amplitudes)

    def prob_table(self) -> ProbTable:
        p = self.probabilities
        return ProbTable(probs=p / p.sum(), n=self.n)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, StateVector):
            return NotImplemented
        return self.n == other.n and bool(
            np.array_equal(self.amplitudes, other.amplitudes)
        )

    def __hash__(self) -> int:
        return hash((self.n, self.amplitudes.tobytes()))
