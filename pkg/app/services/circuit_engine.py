"""Pseudo-random circuits, Haar unitaries and exact statevector simulation.

Gate set
--------
√X, √Y and √W are principal square roots of the Pauli-like operators
P ∈ {X, Y, W} with W = (X + Y)/√2. Because every such P squares to the
identity, √P = ½(1 + i)·I + ½(1 − i)·P:

    √X = ½ [[1+i, 1−i], [1−i, 1+i]]
    √Y = ½ [[1+i, −1−i], [1+i, 1+i]]
    √W = ½ [[1+i, −i√2], [√2, 1+i]]

The fixed two-qubit gate is fSim(θ, φ), θ = π/2 and φ = π/6 by default:

    fSim = [[1, 0, 0, 0],
            [0, cos θ, −i sin θ, 0],
            [0, −i sin θ, cos θ, 0],
            [0, 0, 0, e^{−iφ}]]

Bit order
---------
Qubit 0 is the most significant bit of the basis-state index, matching the
leftmost character of the sample text format.
"""

import math
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import structlog
from scipy import linalg, stats

from app.core.config import settings
from app.core.exceptions import (
    DimensionMismatchError,
    NonUnitaryError,
    SimulatorLimitError,
    TopologyError,
)
from app.models.circuit import CircuitSpec, GateOp, ProbTable, StateVector, Topology
from app.models.samples import SampleSet, SampleSource

logger = structlog.get_logger()

SINGLE_QUBIT_GATES: Tuple[str, ...] = ("sqrt_x", "sqrt_y", "sqrt_w")
CIRCUIT_UNITARY_MAX_QUBITS = 10

_I2 = np.eye(2, dtype=np.complex128)
_PAULI_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
_PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
_PAULI_W = (_PAULI_X + _PAULI_Y) / math.sqrt(2)


def _sqrt_pauli(p: np.ndarray) -> np.ndarray:
    return 0.5 * (1 + 1j) * _I2 + 0.5 * (1 - 1j) * p


GATE_MATRICES: Dict[str, np.ndarray] = {
    "sqrt_x": _sqrt_pauli(_PAULI_X),
    "sqrt_y": _sqrt_pauli(_PAULI_Y),
    "sqrt_w": _sqrt_pauli(_PAULI_W),
}


def fsim(theta: float, phi: float) -> np.ndarray:
    """The fSim(θ, φ) two-qubit gate."""
    c, s = math.cos(theta), math.sin(theta)
    return np.array(
        [
            [1, 0, 0, 0],
            [0, c, -1j * s, 0],
            [0, -1j * s, c, 0],
            [0, 0, 0, np.exp(-1j * phi)],
        ],
        dtype=np.complex128,
    )


def is_unitary(matrix: np.ndarray, tol: Optional[float] = None) -> bool:
    tol = settings.UNITARY_TOL if tol is None else tol
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        return False
    eye = np.eye(matrix.shape[0])
    return bool(np.max(np.abs(matrix @ matrix.conj().T - eye)) <= tol)


# ---------------------------------------------------------------- topology


def _grid_shape(spec: CircuitSpec) -> Tuple[int, int]:
    if spec.grid_shape is not None:
        return spec.grid_shape
    rows = max(d for d in range(1, math.isqrt(spec.n_qubits) + 1) if spec.n_qubits % d == 0)
    return rows, spec.n_qubits // rows


def coupler_sets(spec: CircuitSpec) -> Dict[str, List[Tuple[int, int]]]:
    """Couplers activated by each pattern letter.

    Ring: A couples even bonds (i, i+1), B odd bonds; for even n ≥ 4 the
    closing bond (n−1, 0) joins B, for odd n the chain stays open. C and D
    alias A and B. Grid: A/B are horizontal bonds starting at even/odd
    columns, C/D vertical bonds starting at even/odd rows.
    """
    n = spec.n_qubits
    if spec.topology == Topology.RING:
        even = [(i, i + 1) for i in range(0, n - 1, 2)]
        odd = [(i, i + 1) for i in range(1, n - 1, 2)]
        if n >= 4 and n % 2 == 0:
            odd.append((n - 1, 0))
        return {"A": even, "B": odd, "C": even, "D": odd}

    rows, cols = _grid_shape(spec)

    def q(r: int, c: int) -> int:
        return r * cols + c

    sets: Dict[str, List[Tuple[int, int]]] = {"A": [], "B": [], "C": [], "D": []}
    for r in range(rows):
        for c in range(cols - 1):
            sets["A" if c % 2 == 0 else "B"].append((q(r, c), q(r, c + 1)))
    for r in range(rows - 1):
        for c in range(cols):
            sets["C" if r % 2 == 0 else "D"].append((q(r, c), q(r + 1, c)))
    return sets


# ---------------------------------------------------------------- circuits


def build_circuit(spec: CircuitSpec) -> List[GateOp]:
    """Deterministic gate list for a pseudo-random circuit.

    Every cycle applies one random gate from {√X, √Y, √W} to each qubit,
    never repeating a qubit's previous gate when ``no_repeat`` is on, then
    the fixed fSim gate on every coupler active under the cycle's pattern
    letter.
    """
    couplers = coupler_sets(spec)
    for cycle in range(spec.m_cycles):
        letter = spec.pattern[cycle % len(spec.pattern)]
        if spec.n_qubits >= 2 and not couplers[letter]:
            raise TopologyError(
                f"pattern letter {letter!r} activates no couplers on a "
                f"{spec.n_qubits}-qubit {spec.topology.value}"
            )

    rng = np.random.default_rng(spec.seed)
    two_qubit = fsim(spec.fsim_theta, spec.fsim_phi)
    previous: List[Optional[int]] = [None] * spec.n_qubits
    gates: List[GateOp] = []

    for cycle in range(spec.m_cycles):
        for qubit in range(spec.n_qubits):
            last = previous[qubit]
            if spec.no_repeat and last is not None:
                choices = [g for g in range(len(SINGLE_QUBIT_GATES)) if g != last]
                pick = choices[int(rng.integers(len(choices)))]
            else:
                pick = int(rng.integers(len(SINGLE_QUBIT_GATES)))
            previous[qubit] = pick
            gates.append(GateOp(name=SINGLE_QUBIT_GATES[pick], qubits=(qubit,), cycle=cycle))

        letter = spec.pattern[cycle % len(spec.pattern)]
        for a, b in couplers[letter]:
            gates.append(GateOp(name="fsim", qubits=(a, b), cycle=cycle, matrix=two_qubit))

    logger.debug(
        "Circuit built",
        n=spec.n_qubits,
        m=spec.m_cycles,
        seed=spec.seed,
        gates=len(gates),
    )
    return gates


def _gate_matrix(gate: GateOp) -> np.ndarray:
    if gate.matrix is not None:
        return np.asarray(gate.matrix, dtype=np.complex128)
    if gate.name in GATE_MATRICES:
        return GATE_MATRICES[gate.name]
    if gate.name == "fsim":
        return fsim(settings.FSIM_THETA, settings.FSIM_PHI)
    raise ValueError(f"Unknown gate {gate.name!r}")


def _check_cap(n: int) -> None:
    if n > settings.SIMULATOR_MAX_QUBITS:
        raise SimulatorLimitError(
            f"{n} qubits exceeds the simulator cap of {settings.SIMULATOR_MAX_QUBITS}"
        )


def _apply(state: np.ndarray, matrix: np.ndarray, qubits: Tuple[int, ...]) -> np.ndarray:
    """Contract a k-qubit gate into a state tensor of shape [2]*n."""
    k = len(qubits)
    tensor = matrix.reshape([2] * (2 * k))
    moved = np.tensordot(tensor, state, axes=(list(range(k, 2 * k)), list(qubits)))
    return np.moveaxis(moved, list(range(k)), list(qubits))


def _evolve(state: np.ndarray, gates: Sequence[GateOp], n: int) -> np.ndarray:
    checked: Dict[Tuple[str, int], bool] = {}
    for gate in gates:
        if any(q >= n for q in gate.qubits):
            raise ValueError(f"gate {gate.name} touches qubit outside 0..{n - 1}")
        matrix = _gate_matrix(gate)
        key = (gate.name, id(gate.matrix) if gate.matrix is not None else 0)
        if key not in checked:
            if matrix.shape != (2 ** len(gate.qubits),) * 2 or not is_unitary(matrix):
                raise NonUnitaryError(f"gate {gate.name} on {gate.qubits} is not unitary")
            checked[key] = True
        state = _apply(state, matrix, gate.qubits)
        _check_norm(state)
    return state


def _check_norm(state: np.ndarray) -> None:
    norm = float(np.vdot(state, state).real)
    if abs(norm - 1.0) > 1e-10:
        raise NonUnitaryError(f"statevector norm drifted to {norm!r}")


def simulate(gates: Sequence[GateOp], n: int) -> StateVector:
    """Exact statevector of the gate sequence applied to |0…0⟩."""
    _check_cap(n)
    state = np.zeros([2] * n, dtype=np.complex128)
    state[(0,) * n] = 1.0
    state = _evolve(state, gates, n)
    return StateVector(amplitudes=state.reshape(-1), n=n)


def circuit_unitary(gates: Sequence[GateOp], n: int) -> np.ndarray:
    """Full 2^n × 2^n matrix of a gate sequence; column x is the image of |x⟩."""
    if n > CIRCUIT_UNITARY_MAX_QUBITS:
        raise SimulatorLimitError(
            f"{n} qubits exceeds the dense unitary cap of {CIRCUIT_UNITARY_MAX_QUBITS}"
        )
    N = 2**n
    # The trailing axis carries the basis-state index through every gate.
    state = np.eye(N, dtype=np.complex128).reshape([2] * n + [N])
    for gate in gates:
        state = _apply(state, _gate_matrix(gate), gate.qubits)
    return state.reshape(N, N)


# ---------------------------------------------------------------- Haar


def haar_unitary(N: int, seed: int) -> np.ndarray:
    """Haar-random N×N unitary from the QR decomposition of a complex Ginibre matrix.

    Q is corrected by Λ with Λ_ii = R_ii/|R_ii| so the result is Haar rather
    than biased by the QR sign convention.
    """
    if N < 1:
        raise ValueError("N must be at least 1")
    if N > settings.HAAR_MAX_DIM:
        raise SimulatorLimitError(
            f"dimension {N} exceeds the dense matrix cap of {settings.HAAR_MAX_DIM}"
        )
    rng = np.random.default_rng(seed)
    z = (rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))) / math.sqrt(2)
    q, r = linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def haar_state(n: int, seed: int) -> StateVector:
    """U|0…0⟩ for a Haar-random U: the first column of ``haar_unitary``."""
    _check_cap(n)
    column = haar_unitary(2**n, seed)[:, 0]
    return StateVector(amplitudes=column / np.linalg.norm(column), n=n)


def unitary_error(U: np.ndarray, V: np.ndarray) -> float:
    """E(U, V) = max over unit |ψ⟩ of ‖(U − V)|ψ⟩‖, the largest singular value of U − V."""
    U = np.asarray(U, dtype=np.complex128)
    V = np.asarray(V, dtype=np.complex128)
    if U.shape != V.shape or U.ndim != 2 or U.shape[0] != U.shape[1]:
        raise DimensionMismatchError(f"cannot compare {U.shape} with {V.shape}")
    if not (is_unitary(U, 1e-8) and is_unitary(V, 1e-8)):
        raise NonUnitaryError("unitary_error expects two unitary matrices")
    return float(np.linalg.norm(U - V, ord=2))


# ---------------------------------------------------------------- sampling


def indices_to_bits(indices: np.ndarray, n: int) -> np.ndarray:
    """Rows of n bits, qubit 0 as the most significant bit."""
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    return ((indices.astype(np.int64)[:, None] >> shifts) & 1).astype(np.uint8)


def sample_bitstrings(probs: ProbTable, M: int, seed: int) -> SampleSet:
    """M i.i.d. draws from a dense table by exact inverse-CDF sampling."""
    if M < 1:
        raise ValueError("M must be at least 1")
    rng = np.random.default_rng(seed)
    cdf = np.cumsum(probs.probs)
    u = rng.random(M) * cdf[-1]
    indices = np.minimum(np.searchsorted(cdf, u, side="right"), probs.N - 1)
    return SampleSet(
        bits=indices_to_bits(indices, probs.n),
        label=f"simulator-n{probs.n}-M{M}-seed{seed}",
        source=SampleSource.SIMULATOR,
    )


# ---------------------------------------------------------------- diagnostics


def porter_thomas_distance(probs: ProbTable) -> float:
    """KS statistic between {N·p_x} and the Exp(1) law."""
    scaled = probs.N * probs.probs
    return float(stats.kstest(scaled, "expon").statistic)


def phase_uniformity_distance(state: StateVector) -> float:
    """KS statistic between the phases θ_x and the uniform law on [−π, π]."""
    return float(
        stats.kstest(state.phases, "uniform", args=(-math.pi, 2 * math.pi)).statistic
    )


@lru_cache(maxsize=32)
def _cached_circuit(spec_json: str) -> Tuple[GateOp, ...]:
    return tuple(build_circuit(CircuitSpec.model_validate_json(spec_json)))


def circuit_for(spec: CircuitSpec) -> Tuple[GateOp, ...]:
    """Gate list for a circuit description, reusing recently built lists."""
    return _cached_circuit(spec.model_dump_json())


def simulate_spec(spec: CircuitSpec) -> StateVector:
    """Build and simulate a circuit spec."""
    _check_cap(spec.n_qubits)
    gates = circuit_for(spec)
    state = simulate(gates, spec.n_qubits)
    logger.info(
        "Circuit simulated",
        n=spec.n_qubits,
        m=spec.m_cycles,
        seed=spec.seed,
        gates=len(gates),
    )
    return state
