"""Basic tests for RCS Verify."""


def test_basic_import():
    """Test that basic imports work."""
    from app.core.config import settings

    assert settings is not None
    assert settings.APP_NAME == "RCS Verify"


def test_version_exposed():
    from app import __version__

    assert __version__ == "1.0.0"


def test_settings_defaults():
    """Defaults that the numerical code relies on."""
    from app.core.config import get_settings

    settings = get_settings()
    assert settings.SLICE_FACTOR == 2
    assert settings.NIST_ALPHA == 0.01
    assert settings.SIMULATOR_MAX_QUBITS == 24
    assert settings.OUTLIER_ESTIMATOR == "median"
    assert settings.HISTOGRAM_BINS == "fd"


def test_settings_reject_oversized_simulator(monkeypatch):
    import pytest

    from app.core.config import Settings

    monkeypatch.setenv("SIMULATOR_MAX_QUBITS", "40")
    with pytest.raises(ValueError):
        Settings().validate_configuration()


def test_histogram_rule_validation(monkeypatch):
    import pytest
    from pydantic import ValidationError

    from app.core.config import Settings

    monkeypatch.setenv("HISTOGRAM_BINS", "64")
    assert Settings().HISTOGRAM_BINS == "64"
    monkeypatch.setenv("HISTOGRAM_BINS", "bogus")
    with pytest.raises(ValidationError):
        Settings()


def test_service_modules_import():
    """Every service module imports cleanly."""
    from app.services import (  # noqa: F401
        circuit_engine,
        compare,
        exporters,
        randomness_tests,
        sample_store,
        spectral_analysis,
        transport_metrics,
        xeb_metrics,
    )


def test_run_context_binds_command():
    import structlog

    from app.core.logging import run_context

    with run_context("nist", seed=3, threads=None):
        bound = structlog.contextvars.get_contextvars()
        assert bound["command"] == "nist"
        assert bound["seed"] == 3
        assert "threads" not in bound
    assert "command" not in structlog.contextvars.get_contextvars()
