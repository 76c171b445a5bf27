"""API router exposing the verification operations."""

from pathlib import Path
from typing import Any, Callable, List, TypeVar

from fastapi import APIRouter, HTTPException
from fastapi.concurrency import run_in_threadpool
import structlog

from app.core.config import settings
from app.core.exceptions import PathAccessError, VerificationError
from app.models.api import (
    HeatMapRequest,
    HeatMapResponse,
    NistRequest,
    SamplePayload,
    SimulateRequest,
    SimulateResponse,
    SpectrumRequest,
    SpectrumResponse,
    WassersteinRequest,
    XebRequest,
)
from app.models.metrics import TestOutcome, WassersteinResult, XebResult
from app.models.report import CompareConfig, FileInput, IdealFile, MetricReport
from app.models.samples import SampleSet
from app.services import (
    circuit_engine,
    compare,
    randomness_tests,
    sample_store,
    spectral_analysis,
    transport_metrics,
    xeb_metrics,
)
from app.services.exporters import load_prob_table

router = APIRouter()
logger = structlog.get_logger()

T = TypeVar("T")


async def _run(operation: str, func: Callable[..., T], *args: Any, **kwargs: Any) -> T:
    """Run CPU-bound work in the threadpool and translate domain errors."""
    try:
        return await run_in_threadpool(func, *args, **kwargs)
    except VerificationError as e:
        logger.warning("Verification request rejected", operation=operation, error=str(e))
        raise HTTPException(status_code=422, detail=str(e))
    except FileNotFoundError as e:
        logger.warning("Requested file not found", operation=operation, error=str(e))
        raise HTTPException(status_code=404, detail=str(e))
    except (ValueError, MemoryError) as e:
        logger.warning("Invalid verification request", operation=operation, error=str(e))
        raise HTTPException(status_code=422, detail=str(e))
    except OSError as e:
        logger.error("File access failed", operation=operation, error=str(e), exc_info=True)
        raise HTTPException(status_code=500, detail=str(e))
    except Exception as e:
        logger.error("Verification endpoint failed", operation=operation, error=str(e), exc_info=True)
        raise HTTPException(
            status_code=500, detail=f"An unexpected error occurred: {str(e)}"
        )


def _data_path(raw: str) -> str:
    """Resolve a request path against DATA_ROOT, refusing anything that escapes it."""
    root = Path(settings.DATA_ROOT).resolve()
    candidate = Path(raw)
    resolved = (candidate if candidate.is_absolute() else root / candidate).resolve()
    if not resolved.is_relative_to(root):
        raise PathAccessError(f"path {raw!r} is outside the data root")
    return str(resolved)


def _load(payload: SamplePayload) -> SampleSet:
    if payload.path is not None:
        try:
            return sample_store.parse_sample_file(_data_path(payload.path), expected_n=payload.expected_n)
        except OSError as e:
            if isinstance(e.__cause__, FileNotFoundError):
                raise FileNotFoundError(str(e)) from e
            raise
    return sample_store.parse_lines(
        payload.bitstrings or [], expected_n=payload.expected_n, label=payload.label
    )


def _xeb(request: XebRequest) -> XebResult:
    sample = _load(request.sample)
    if request.circuit is not None:
        ideal = circuit_engine.simulate_spec(request.circuit).prob_table()
    else:
        ideal = load_prob_table(_data_path(request.ideal_path or ""))
    return xeb_metrics.linear_xeb(sample, ideal)


def _heat_map(request: HeatMapRequest) -> HeatMapResponse:
    heat = spectral_analysis.heat_map(_load(request.sample))
    sliced = None
    if request.include_sliced and heat.sliced_mean is not None:
        sliced = heat.sliced_mean.tolist()
    return HeatMapResponse(
        summary=heat.summary(),
        per_qubit_mean=heat.per_qubit_mean.tolist(),
        sliced_mean=sliced,
        warnings=heat.warnings,
    )


def _spectrum(request: SpectrumRequest) -> SpectrumResponse:
    spectrum = spectral_analysis.sample_spectrum(
        _load(request.sample), k=request.k, estimator=request.estimator
    )
    fit = None
    fit_error = None
    if request.fit:
        try:
            fit = spectral_analysis.bulk_fit_report(spectrum)
        except VerificationError as e:
            fit_error = str(e)
    return SpectrumResponse(
        summary=spectrum.summary(fit),
        fit=fit,
        fit_error=fit_error,
        bulk_histogram=spectrum.bulk_histogram,
        bin_edges=spectrum.bin_edges,
    )


def _wasserstein(request: WassersteinRequest) -> WassersteinResult:
    a = transport_metrics.to_values(_load(request.a))
    b = transport_metrics.to_values(_load(request.b))
    return transport_metrics.wasserstein(
        a, b, request.alpha, length_policy=request.length_policy, backend=request.backend
    )


def _confined_compare(config: CompareConfig) -> MetricReport:
    inputs = [
        item.model_copy(update={"path": _data_path(item.path)})
        if isinstance(item, FileInput)
        else item
        for item in config.inputs
    ]
    ideal = config.ideal
    if isinstance(ideal, IdealFile):
        ideal = ideal.model_copy(update={"path": _data_path(ideal.path)})
    return compare.run_compare(config.model_copy(update={"inputs": inputs, "ideal": ideal}))


def _simulate(request: SimulateRequest) -> SimulateResponse:
    spec = request.circuit
    gates = circuit_engine.circuit_for(spec)
    state = circuit_engine.simulate_spec(spec)
    table = state.prob_table()
    bitstrings = None
    if request.samples:
        drawn = circuit_engine.sample_bitstrings(table, request.samples, request.sample_seed)
        bitstrings = ["".join("1" if b else "0" for b in row) for row in drawn.bits]
    return SimulateResponse(
        n=spec.n_qubits,
        m=spec.m_cycles,
        gates=len(gates),
        porter_thomas_ks=circuit_engine.porter_thomas_distance(table),
        phase_ks=circuit_engine.phase_uniformity_distance(state),
        probabilities=table.probs.tolist() if request.include_probabilities else None,
        bitstrings=bitstrings,
    )


@router.post("/xeb", response_model=XebResult)
async def xeb_endpoint(request: XebRequest) -> XebResult:
    """Linear XEB of a sample against a table file or a simulated circuit."""
    return await _run("xeb", _xeb, request)


@router.post("/nist", response_model=List[TestOutcome])
async def nist_endpoint(request: NistRequest) -> List[TestOutcome]:
    return await _run(
        "nist",
        lambda: randomness_tests.run_battery(_load(request.sample), alpha=request.alpha),
    )


@router.post("/heatmap", response_model=HeatMapResponse)
async def heatmap_endpoint(request: HeatMapRequest) -> HeatMapResponse:
    return await _run("heatmap", _heat_map, request)


@router.post("/spectrum", response_model=SpectrumResponse)
async def spectrum_endpoint(request: SpectrumRequest) -> SpectrumResponse:
    """Gram spectrum, outlier peak and MP distance, with the bulk fit when it applies."""
    return await _run("spectrum", _spectrum, request)


@router.post("/wdist", response_model=WassersteinResult)
async def wdist_endpoint(request: WassersteinRequest) -> WassersteinResult:
    return await _run("wdist", _wasserstein, request)


@router.post("/simulate", response_model=SimulateResponse)
async def simulate_endpoint(request: SimulateRequest) -> SimulateResponse:
    return await _run("simulate", _simulate, request)


@router.post("/compare", response_model=MetricReport)
async def compare_endpoint(config: CompareConfig) -> MetricReport:
    """Batch comparison; per-input failures come back in the report's errors."""
    return await _run("compare", _confined_compare, config)
