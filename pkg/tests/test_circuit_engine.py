"""Tests for circuit construction, simulation, Haar unitaries and sampling."""

import math

import numpy as np
import pytest
from scipy import stats

from app.core.exceptions import (
    DimensionMismatchError,
    NonUnitaryError,
    SimulatorLimitError,
    TopologyError,
)
from app.models.circuit import CircuitSpec, GateOp, ProbTable, Topology
from app.models.samples import SampleSet
from app.services import circuit_engine


def _spec(n: int, m: int, seed: int = 0, **kwargs) -> CircuitSpec:
    return CircuitSpec(n_qubits=n, m_cycles=m, seed=seed, **kwargs)


# ---------------------------------------------------------------- gates


def test_gate_matrices_are_unitary():
    for name, matrix in circuit_engine.GATE_MATRICES.items():
        assert circuit_engine.is_unitary(matrix), name
    assert circuit_engine.is_unitary(circuit_engine.fsim(math.pi / 2, math.pi / 6))


def test_sqrt_gates_square_to_paulis():
    x = np.array([[0, 1], [1, 0]])
    y = np.array([[0, -1j], [1j, 0]])
    sx = circuit_engine.GATE_MATRICES["sqrt_x"]
    sy = circuit_engine.GATE_MATRICES["sqrt_y"]
    sw = circuit_engine.GATE_MATRICES["sqrt_w"]
    np.testing.assert_allclose(sx @ sx, x, atol=1e-12)
    np.testing.assert_allclose(sy @ sy, y, atol=1e-12)
    np.testing.assert_allclose(sw @ sw, (x + y) / math.sqrt(2), atol=1e-12)


# ---------------------------------------------------------------- circuits


def test_two_qubit_single_cycle_structure():
    gates = circuit_engine.build_circuit(_spec(2, 1))
    assert sum(len(g.qubits) == 1 for g in gates) == 2
    assert sum(len(g.qubits) == 2 for g in gates) == 1


def test_gate_count_twelve_qubit_ring():
    spec = _spec(12, 14)
    gates = circuit_engine.build_circuit(spec)
    couplers = circuit_engine.coupler_sets(spec)
    expected = 12 * 14 + sum(
        len(couplers[spec.pattern[c % len(spec.pattern)]]) for c in range(14)
    )
    assert len(gates) == expected == 252


def test_build_is_deterministic():
    spec = _spec(6, 8, seed=5)
    assert circuit_engine.build_circuit(spec) == circuit_engine.build_circuit(spec)
    assert circuit_engine.build_circuit(spec) != circuit_engine.build_circuit(_spec(6, 8, seed=6))


def test_single_qubit_gates_never_repeat():
    gates = circuit_engine.build_circuit(_spec(5, 30, seed=2))
    history = {}
    for gate in gates:
        if len(gate.qubits) == 1:
            history.setdefault(gate.qubits[0], []).append(gate.name)
    for names in history.values():
        assert all(a != b for a, b in zip(names, names[1:]))
        assert set(names) <= set(circuit_engine.SINGLE_QUBIT_GATES)


def test_ring_wrap_bond_only_for_even_n():
    even = circuit_engine.coupler_sets(_spec(6, 1))
    odd = circuit_engine.coupler_sets(_spec(5, 1))
    assert (5, 0) in even["B"]
    assert all(0 not in pair or pair == (0, 1) for pair in odd["B"] + odd["A"])
    assert even["C"] == even["A"] and even["D"] == even["B"]


def test_grid_couplers():
    sets = circuit_engine.coupler_sets(_spec(6, 1, topology=Topology.GRID, grid_shape=(2, 3)))
    assert sets["A"] == [(0, 1), (3, 4)]
    assert sets["B"] == [(1, 2), (4, 5)]
    assert sets["C"] == [(0, 3), (1, 4), (2, 5)]
    assert sets["D"] == []


def test_pattern_without_couplers_raises():
    with pytest.raises(TopologyError):
        circuit_engine.build_circuit(_spec(2, 2, pattern="B"))
    with pytest.raises(TopologyError):
        circuit_engine.build_circuit(
            _spec(4, 1, topology=Topology.GRID, grid_shape=(1, 4), pattern="C")
        )


# ---------------------------------------------------------------- simulation


def test_empty_circuit_is_ground_state():
    state = circuit_engine.simulate([], 3)
    expected = np.zeros(8)
    expected[0] = 1.0
    np.testing.assert_array_equal(state.amplitudes, expected)


def test_sqrt_x_twice_flips_qubit():
    gates = [GateOp(name="sqrt_x", qubits=(0,)), GateOp(name="sqrt_x", qubits=(0,))]
    state = circuit_engine.simulate(gates, 1)
    assert state.probabilities[1] == pytest.approx(1.0, abs=1e-12)


def test_bit_order_qubit_zero_is_most_significant():
    gates = [GateOp(name="sqrt_x", qubits=(0,)), GateOp(name="sqrt_x", qubits=(0,))]
    state = circuit_engine.simulate(gates, 3)
    assert state.probabilities[0b100] == pytest.approx(1.0, abs=1e-12)


def test_simulation_preserves_norm():
    state = circuit_engine.simulate_spec(_spec(8, 10, seed=1))
    assert float(np.sum(state.probabilities)) == pytest.approx(1.0, abs=1e-10)


def test_simulator_cap():
    with pytest.raises(SimulatorLimitError):
        circuit_engine.simulate([], 25)


def test_non_unitary_gate_rejected():
    bad = GateOp(name="bad", qubits=(0,), matrix=2 * np.eye(2))
    with pytest.raises(NonUnitaryError):
        circuit_engine.simulate([bad], 1)


def test_norm_checked_after_every_gate(monkeypatch):
    calls = []
    check = circuit_engine._check_norm

    def counting(state):
        calls.append(1)
        check(state)

    monkeypatch.setattr(circuit_engine, "_check_norm", counting)
    spec = _spec(4, 3, seed=2)
    gates = circuit_engine.build_circuit(spec)
    circuit_engine.simulate(gates, 4)
    assert len(calls) == len(gates)


def test_norm_drift_inside_a_cycle_is_caught(monkeypatch):
    monkeypatch.setattr(circuit_engine, "is_unitary", lambda matrix, tol=None: True)
    gates = [
        GateOp(name="sqrt_x", qubits=(0,), cycle=0),
        GateOp(name="leaky", qubits=(1,), cycle=0, matrix=1.001 * np.eye(2)),
    ]
    with pytest.raises(NonUnitaryError, match="norm drifted"):
        circuit_engine.simulate(gates, 2)


def test_circuit_unitary_columns_match_simulation():
    spec = _spec(4, 6, seed=3)
    gates = circuit_engine.build_circuit(spec)
    U = circuit_engine.circuit_unitary(gates, 4)
    assert circuit_engine.is_unitary(U, 1e-10)
    np.testing.assert_allclose(U[:, 0], circuit_engine.simulate(gates, 4).amplitudes, atol=1e-12)


def test_circuit_unitary_cap():
    with pytest.raises(SimulatorLimitError):
        circuit_engine.circuit_unitary([], 11)


def test_porter_thomas_for_deep_circuits():
    """Pooled N·p over several deep 12-qubit circuits follows Exp(1)."""
    scaled = np.concatenate(
        [
            4096 * circuit_engine.simulate_spec(_spec(12, 20, seed=s)).probabilities
            for s in range(8)
        ]
    )
    assert stats.kstest(scaled, "expon").statistic < 0.02


def test_porter_thomas_distance_single_circuit():
    table = circuit_engine.simulate_spec(_spec(12, 20, seed=0)).prob_table()
    assert circuit_engine.porter_thomas_distance(table) < 0.05
    assert circuit_engine.porter_thomas_distance(ProbTable.uniform(4)) > 0.5


def test_phases_uniform_for_deep_circuits():
    phases = np.concatenate(
        [circuit_engine.simulate_spec(_spec(12, 20, seed=s)).phases for s in range(8)]
    )
    assert stats.kstest(phases, "uniform", args=(-math.pi, 2 * math.pi)).statistic < 0.02
    state = circuit_engine.simulate_spec(_spec(12, 20, seed=0))
    assert circuit_engine.phase_uniformity_distance(state) < 0.05


# ---------------------------------------------------------------- Haar


def test_haar_unitarity():
    U = circuit_engine.haar_unitary(64, seed=0)
    np.testing.assert_allclose(U @ U.conj().T, np.eye(64), atol=1e-10)


def test_haar_scalar_has_unit_modulus():
    phases = []
    for seed in range(200):
        u = circuit_engine.haar_unitary(1, seed)
        assert abs(abs(u[0, 0]) - 1.0) < 1e-12
        phases.append(np.angle(u[0, 0]))
    assert stats.kstest(phases, "uniform", args=(-math.pi, 2 * math.pi)).pvalue > 1e-3


def test_haar_first_column_statistics():
    """|U_x0|² follows Pr(p) = (N−1)(1−p)^(N−2), CDF 1 − (1−p)^(N−1)."""
    N = 16
    p = np.concatenate(
        [np.abs(circuit_engine.haar_unitary(N, seed)[:, 0]) ** 2 for seed in range(10_000)]
    )
    statistic = stats.kstest(p, lambda x: 1.0 - (1.0 - x) ** (N - 1)).statistic
    assert statistic < 0.02


def test_haar_dimension_cap(monkeypatch):
    monkeypatch.setattr(circuit_engine.settings, "HAAR_MAX_DIM", 8)
    with pytest.raises(SimulatorLimitError):
        circuit_engine.haar_unitary(16, seed=0)


def test_haar_state():
    state = circuit_engine.haar_state(3, seed=4)
    np.testing.assert_allclose(
        state.amplitudes, circuit_engine.haar_unitary(8, 4)[:, 0], atol=1e-12
    )


# ---------------------------------------------------------------- unitary error


def test_unitary_error_identities():
    U = circuit_engine.haar_unitary(8, seed=1)
    assert circuit_engine.unitary_error(U, U) == pytest.approx(0.0, abs=1e-12)
    assert circuit_engine.unitary_error(np.eye(2), -np.eye(2)) == pytest.approx(2.0)


def test_unitary_error_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        circuit_engine.unitary_error(np.eye(2), np.eye(4))


def test_unitary_error_requires_unitaries():
    with pytest.raises(NonUnitaryError):
        circuit_engine.unitary_error(np.eye(2), 2 * np.eye(2))


def test_measurement_difference_bounded_by_twice_unitary_error():
    violations = 0
    for seed in range(100):
        N = [2, 4, 8, 16][seed % 4]
        U = circuit_engine.haar_unitary(N, seed=2 * seed)
        V = circuit_engine.haar_unitary(N, seed=2 * seed + 1)
        error = circuit_engine.unitary_error(U, V)
        diff = np.abs(np.abs(U[:, 0]) ** 2 - np.abs(V[:, 0]) ** 2)
        violations += int(np.any(diff > 2 * error + 1e-12))
    assert violations == 0


# ---------------------------------------------------------------- sampling


def test_point_mass_sampling():
    probs = np.zeros(8)
    probs[5] = 1.0
    sample = circuit_engine.sample_bitstrings(ProbTable(probs=probs, n=3), 50, seed=0)
    assert np.all(sample.bits == [1, 0, 1])


def test_uniform_sampling_counts():
    sample = circuit_engine.sample_bitstrings(ProbTable.uniform(3), 100_000, seed=9)
    counts = np.bincount(sample.to_indices(), minlength=8)
    sigma = math.sqrt(100_000 * (1 / 8) * (7 / 8))
    assert np.all(np.abs(counts - 12_500) < 5 * sigma)


def test_sampling_is_deterministic():
    table = circuit_engine.simulate_spec(_spec(5, 6, seed=2)).prob_table()
    assert circuit_engine.sample_bitstrings(table, 1000, 4) == circuit_engine.sample_bitstrings(
        table, 1000, 4
    )


def test_indices_to_bits_round_trip():
    indices = np.arange(32)
    bits = circuit_engine.indices_to_bits(indices, 5)
    assert bits[5].tolist() == [0, 0, 1, 0, 1]
    np.testing.assert_array_equal(SampleSet(bits=bits).to_indices(), indices)
