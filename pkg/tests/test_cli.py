"""Tests for the rcs-verify command line."""

import orjson
import pytest

from app import __version__, cli
from app.core.config import settings
from app.models.report import CompareConfig
from app.services import sample_store


def _run(capsys, *argv):
    code = cli.main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.fixture
def simulated(tmp_path, capsys):
    probs = tmp_path / "ideal.npy"
    samples = tmp_path / "samples.txt"
    code, out, _ = _run(
        capsys,
        "simulate", "--n", "6", "--m", "8", "--seed", "3",
        "--samples", "5000", "--sample-seed", "1",
        "--probs-out", str(probs), "--samples-out", str(samples),
    )
    assert code == 0
    return probs, samples, orjson.loads(out)


def test_version(capsys):
    with pytest.raises(SystemExit) as info:
        cli.main(["--version"])
    assert info.value.code == 0
    assert __version__ in capsys.readouterr().out


def test_simulate(simulated):
    probs, samples, payload = simulated
    assert payload["n"] == 6 and payload["m"] == 8 and payload["seed"] == 3
    assert payload["gates"] > 6 * 8
    assert payload["outputs"] == {"probabilities": str(probs), "samples": str(samples)}
    assert sample_store.parse_sample_file(samples).M == 5000


def test_simulate_without_seed_uses_default(capsys):
    code, out, err = _run(capsys, "simulate", "--n", "3", "--m", "2")
    assert code == 0, err
    payload = orjson.loads(out)
    assert payload["seed"] == settings.DEFAULT_SEED
    assert (payload["n"], payload["m"]) == (3, 2)


def test_xeb_against_table(simulated, capsys):
    probs, samples, _ = simulated
    code, out, _ = _run(capsys, "xeb", str(samples), "--ideal", str(probs), "--distances")
    assert code == 0
    payload = orjson.loads(out)
    assert payload["M"] == 5000
    assert payload["fidelity"] > 0.0
    assert 0.0 <= payload["kolmogorov_distance"] <= 1.0
    assert 0.0 <= payload["bhattacharya_overlap"] <= 1.0


def test_xeb_against_circuit_matches_table(simulated, capsys):
    probs, samples, _ = simulated
    _, from_table, _ = _run(capsys, "xeb", str(samples), "--ideal", str(probs))
    code, from_circuit, _ = _run(capsys, "xeb", str(samples), "--n", "6", "--m", "8", "--seed", "3")
    assert code == 0
    assert orjson.loads(from_circuit) == orjson.loads(from_table)


def test_xeb_against_circuit_without_seed(simulated, capsys):
    _, samples, _ = simulated
    code, implicit, err = _run(capsys, "xeb", str(samples), "--n", "6", "--m", "8")
    assert code == 0, err
    _, explicit, _ = _run(
        capsys, "xeb", str(samples), "--n", "6", "--m", "8", "--seed", str(settings.DEFAULT_SEED)
    )
    assert orjson.loads(implicit) == orjson.loads(explicit)


def test_xeb_needs_an_ideal(sample_file):
    with pytest.raises(SystemExit) as info:
        cli.main(["xeb", str(sample_file)])
    assert info.value.code == 2


def test_nist(uniform_file, capsys):
    code, out, _ = _run(capsys, "nist", str(uniform_file), "--alpha", "0.001")
    assert code == 0
    outcomes = orjson.loads(out)
    assert [o["test_name"] for o in outcomes] == [
        "monobit", "block_frequency", "runs", "longest_run",
        "cumulative_sums", "approximate_entropy",
    ]
    assert all(o["alpha"] == 0.001 for o in outcomes)


def test_nist_strict_fails_on_biased_bits(tmp_path, capsys):
    path = tmp_path / "zeros.txt"
    path.write_text(("0" * 100 + "\n") * 200)
    code, _, _ = _run(capsys, "nist", str(path))
    assert code == 0
    code, _, _ = _run(capsys, "nist", str(path), "--strict")
    assert code == 2


def test_short_stream_is_a_data_error(sample_file, capsys):
    code, out, err = _run(capsys, "nist", str(sample_file))
    assert code == 2
    assert out == ""
    assert "rcs-verify nist:" in err


def test_missing_file_is_a_data_error(tmp_path, capsys):
    code, _, err = _run(capsys, "heatmap", str(tmp_path / "absent.txt"))
    assert code == 2
    assert "absent.txt" in err


def test_unexpected_failure_exit_code(sample_file, capsys, monkeypatch):
    def boom(args):
        raise RuntimeError("kaput")

    monkeypatch.setattr(cli, "cmd_heatmap", boom)
    code, _, err = _run(capsys, "heatmap", str(sample_file))
    assert code == 1
    assert "unexpected error: kaput" in err


def test_heatmap_outputs(uniform_file, tmp_path, capsys):
    csv_path, pgm_path = tmp_path / "heat.csv", tmp_path / "heat.pgm"
    code, out, _ = _run(
        capsys, "heatmap", str(uniform_file), "--csv", str(csv_path), "--pgm", str(pgm_path)
    )
    assert code == 0
    in_memory = orjson.loads(out)
    assert in_memory["n"] == 16 and in_memory["L"] == 250
    assert csv_path.exists()
    assert pgm_path.read_bytes().startswith(b"P5\n16 16\n255\n")

    code, streamed, _ = _run(capsys, "heatmap", str(uniform_file), "--stream")
    assert orjson.loads(streamed) == in_memory


def test_spectrum(uniform_file, tmp_path, capsys):
    csv_path, summary_path = tmp_path / "spectrum.csv", tmp_path / "summary.json"
    code, out, _ = _run(
        capsys, "spectrum", str(uniform_file), "--csv", str(csv_path), "--summary", str(summary_path)
    )
    assert code == 0
    payload = orjson.loads(out)
    assert payload["summary"]["k"] == 32
    assert payload["summary"]["slices"] == 125
    assert "fit" in payload
    assert orjson.loads(summary_path.read_bytes()) == payload["summary"]

    code, out, _ = _run(capsys, "spectrum", str(uniform_file), "--no-fit", "--estimator", "mean")
    payload = orjson.loads(out)
    assert "fit" not in payload
    assert payload["summary"]["estimator"] == "mean"


def test_spectrum_reports_rejected_fit(uniform_file, capsys):
    code, out, _ = _run(capsys, "spectrum", str(uniform_file), "--k", "8")
    assert code == 0
    assert "fit_error" in orjson.loads(out)


def test_wdist(uniform_file, sample_file, tmp_path, capsys):
    code, out, _ = _run(capsys, "wdist", "--a", str(uniform_file), "--b", str(uniform_file))
    assert code == 0
    assert orjson.loads(out)["distance"] == 0.0

    other = tmp_path / "other.txt"
    sample_store.write_sample_file(sample_store.generate_uniform(16, 1000, seed=2), other)
    code, out, _ = _run(
        capsys, "wdist", "--a", str(uniform_file), "--b", str(other), "--backend", "pot"
    )
    payload = orjson.loads(out)
    assert payload["truncated"] is True
    assert payload["M_used"] == 1000
    assert payload["backend"] == "pot"


def _write_config(path, **overrides):
    raw = {
        "inputs": [
            {"kind": "uniform", "label": "a", "n": 8, "M": 2000, "seed": 1},
            {"kind": "spoof", "label": "b", "n": 8, "M": 2000, "seed": 2, "prefix_len": 2},
        ],
        "metrics": ["heatmap", "nist", "wdist"],
    }
    raw.update(overrides)
    path.write_bytes(orjson.dumps(CompareConfig.model_validate(raw).model_dump(mode="json")))
    return path


def test_compare_json_is_reproducible(tmp_path, capsys):
    config = _write_config(tmp_path / "run.json")
    code, first, _ = _run(
        capsys, "compare", "--config", str(config), "--no-timestamp", "--threads", "2"
    )
    assert code == 0
    _, second, _ = _run(capsys, "--no-timestamp", "--threads", "2", "compare", "--config", str(config))
    assert first == second
    report = orjson.loads(first)
    assert report["generated_at"] is None
    assert set(report["heatmap_summary"]) == {"a", "b"}


def test_compare_text_to_file(tmp_path, capsys):
    config = _write_config(tmp_path / "run.json")
    output = tmp_path / "report.txt"
    code, out, _ = _run(
        capsys, "compare", "--config", str(config), "--format", "text", "--output", str(output)
    )
    assert code == 0
    assert out == ""
    assert "heatmap" in output.read_text(encoding="utf-8")


def test_compare_strict_exit_code(tmp_path, capsys):
    config = _write_config(
        tmp_path / "run.json",
        inputs=[
            {"kind": "uniform", "label": "a", "n": 8, "M": 2000, "seed": 1},
            {"kind": "file", "label": "gone", "path": str(tmp_path / "absent.txt")},
        ],
    )
    code, out, _ = _run(capsys, "compare", "--config", str(config))
    assert code == 0
    assert orjson.loads(out)["errors"][0]["input"] == "gone"
    code, _, _ = _run(capsys, "compare", "--config", str(config), "--strict")
    assert code == 2


def test_threads_and_seed_override_config(tmp_path, capsys):
    config = _write_config(tmp_path / "run.json", workers=1, seed=5, metrics=["heatmap"])
    code, out, _ = _run(
        capsys, "compare", "--config", str(config), "--threads", "3", "--seed", "9", "--no-timestamp"
    )
    assert code == 0
    echoed = orjson.loads(out)["config"]
    assert echoed["workers"] == 3
    assert echoed["seed"] == 9


def test_compare_missing_config(tmp_path, capsys):
    code, _, err = _run(capsys, "compare", "--config", str(tmp_path / "absent.json"))
    assert code == 2
    assert "absent.json" in err


def test_global_options_after_subcommand(sample_file, capsys):
    code, out, _ = _run(capsys, "heatmap", str(sample_file), "--log-level", "ERROR", "--seed", "4")
    assert code == 0
    assert orjson.loads(out)["M"] == 2
