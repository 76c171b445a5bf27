"""Tests for the HTTP surface."""

import pytest
from fastapi.testclient import TestClient

from app.core.config import settings
from app.main import app
from app.models.circuit import ProbTable
from app.services import exporters, sample_store


@pytest.fixture(scope="module")
def client():
    with TestClient(app) as test_client:
        yield test_client


@pytest.fixture(autouse=True)
def data_root(monkeypatch, tmp_path):
    monkeypatch.setattr(settings, "DATA_ROOT", str(tmp_path))
    return tmp_path


@pytest.fixture(scope="module")
def uniform_lines():
    sample = sample_store.generate_uniform(10, 2000, seed=4)
    return ["".join(str(int(b)) for b in row) for row in sample.bits]


def test_root_and_health(client):
    assert client.get("/").json()["status"] == "operational"
    health = client.get("/health")
    assert health.status_code == 200
    assert "numpy" in health.json()["checks"]["numerics"]


def test_config_endpoint(client):
    body = client.get("/config").json()
    assert body["limits"]["simulator_max_qubits"] == 24
    assert body["wasserstein"]["backend"] == "order-statistic"


def test_heatmap_inline(client):
    response = client.post("/api/heatmap", json={"sample": {"bitstrings": ["010", "111"]}})
    assert response.status_code == 200
    body = response.json()
    assert body["per_qubit_mean"] == [0.5, 1.0, 0.5]
    assert body["sliced_mean"] is None
    assert body["warnings"]


def test_heatmap_from_path(client, uniform_file):
    response = client.post("/api/heatmap", json={"sample": {"path": str(uniform_file)}})
    assert response.status_code == 200
    assert len(response.json()["sliced_mean"]) == 16


def test_sample_payload_needs_one_source(client):
    response = client.post("/api/heatmap", json={"sample": {}})
    assert response.status_code == 422


def test_bad_bitstrings_are_422(client):
    response = client.post("/api/heatmap", json={"sample": {"bitstrings": ["01", "2a"]}})
    assert response.status_code == 422
    assert "non-binary" in response.json()["detail"]


def test_missing_path_is_404(client, tmp_path):
    response = client.post(
        "/api/heatmap", json={"sample": {"path": str(tmp_path / "absent.txt")}}
    )
    assert response.status_code == 404


def test_xeb_with_circuit(client):
    sim = client.post(
        "/api/simulate",
        json={"circuit": {"n_qubits": 6, "m_cycles": 8, "seed": 2}, "samples": 3000},
    )
    assert sim.status_code == 200
    body = sim.json()
    assert len(body["bitstrings"]) == 3000
    assert body["probabilities"] is None

    response = client.post(
        "/api/xeb",
        json={
            "sample": {"bitstrings": body["bitstrings"]},
            "circuit": {"n_qubits": 6, "m_cycles": 8, "seed": 2},
        },
    )
    assert response.status_code == 200
    assert response.json()["M"] == 3000
    assert response.json()["fidelity"] > 0.0


def test_xeb_with_table_file(client, tmp_path):
    path = tmp_path / "ideal.npy"
    exporters.save_prob_table(ProbTable.uniform(3), path)
    response = client.post(
        "/api/xeb",
        json={"sample": {"bitstrings": ["010", "111"]}, "ideal_path": str(path)},
    )
    assert response.status_code == 200
    assert response.json()["fidelity"] == 0.0


def test_xeb_dimension_mismatch_is_422(client):
    response = client.post(
        "/api/xeb",
        json={
            "sample": {"bitstrings": ["01", "11"]},
            "circuit": {"n_qubits": 3, "m_cycles": 2},
        },
    )
    assert response.status_code == 422


def test_simulator_cap_is_422(client):
    response = client.post("/api/simulate", json={"circuit": {"n_qubits": 30, "m_cycles": 1}})
    assert response.status_code == 422


def test_nist(client, uniform_lines):
    response = client.post("/api/nist", json={"sample": {"bitstrings": uniform_lines}})
    assert response.status_code == 200
    assert len(response.json()) == 6


def test_nist_short_stream_is_422(client):
    response = client.post("/api/nist", json={"sample": {"bitstrings": ["0101"] * 10}})
    assert response.status_code == 422


def test_spectrum(client, uniform_lines):
    response = client.post("/api/spectrum", json={"sample": {"bitstrings": uniform_lines}})
    assert response.status_code == 200
    body = response.json()
    assert body["summary"]["k"] == 20
    assert body["fit"]["gamma"] == 0.5
    assert body["fit_error"] is None


def test_wdist(client, uniform_lines):
    response = client.post(
        "/api/wdist",
        json={
            "a": {"bitstrings": uniform_lines},
            "b": {"bitstrings": ["0" * 10] * 500},
        },
    )
    assert response.status_code == 200
    body = response.json()
    assert body["truncated"] is True
    assert body["distance"] > 0.3


def test_compare(client):
    config = {
        "inputs": [
            {"kind": "uniform", "label": "a", "n": 8, "M": 2000, "seed": 1},
            {"kind": "spoof", "label": "b", "n": 8, "M": 2000, "prefix_len": 2},
        ],
        "metrics": ["heatmap", "wdist"],
        "include_timestamp": False,
    }
    response = client.post("/api/compare", json=config)
    assert response.status_code == 200
    body = response.json()
    assert set(body["heatmap_summary"]) == {"a", "b"}
    assert body["wasserstein_matrix"]["a"]["b"] > 0.0


def test_compare_invalid_config_is_422(client):
    response = client.post("/api/compare", json={"inputs": []})
    assert response.status_code == 422


def test_path_outside_data_root_is_422(client, tmp_path_factory):
    outside = tmp_path_factory.mktemp("outside") / "uniform.txt"
    sample_store.write_sample_file(sample_store.generate_uniform(4, 10, seed=1), outside)
    response = client.post("/api/heatmap", json={"sample": {"path": str(outside)}})
    assert response.status_code == 422
    assert "outside the data root" in response.json()["detail"]


def test_parent_traversal_is_422(client, data_root):
    escaped = f"../{data_root.name}/../../etc/passwd"
    response = client.post("/api/heatmap", json={"sample": {"path": escaped}})
    assert response.status_code == 422


def test_relative_path_resolves_inside_data_root(client, uniform_file):
    response = client.post("/api/heatmap", json={"sample": {"path": uniform_file.name}})
    assert response.status_code == 200
    assert len(response.json()["per_qubit_mean"]) == 16


def test_ideal_path_outside_data_root_is_422(client, tmp_path_factory):
    path = tmp_path_factory.mktemp("outside") / "ideal.npy"
    exporters.save_prob_table(ProbTable.uniform(3), path)
    response = client.post(
        "/api/xeb",
        json={"sample": {"bitstrings": ["010", "111"]}, "ideal_path": str(path)},
    )
    assert response.status_code == 422


def test_compare_file_outside_data_root_is_422(client, tmp_path_factory):
    outside = tmp_path_factory.mktemp("outside") / "uniform.txt"
    sample_store.write_sample_file(sample_store.generate_uniform(8, 500, seed=2), outside)
    config = {
        "inputs": [
            {"kind": "file", "path": str(outside)},
            {"kind": "uniform", "label": "u", "n": 8, "M": 500, "seed": 1},
        ],
        "metrics": ["heatmap"],
        "include_timestamp": False,
    }
    response = client.post("/api/compare", json=config)
    assert response.status_code == 422


def test_compare_file_inside_data_root(client, uniform_file):
    config = {
        "inputs": [{"kind": "file", "label": "disk", "path": uniform_file.name}],
        "metrics": ["heatmap"],
        "include_timestamp": False,
    }
    response = client.post("/api/compare", json=config)
    assert response.status_code == 200
    assert "disk" in response.json()["heatmap_summary"]
