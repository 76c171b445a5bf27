"""Linear XEB and classical distances between output distributions."""

import math

import numpy as np
import structlog

from app.core.config import settings
from app.core.exceptions import DimensionMismatchError, SimulatorLimitError
from app.models.circuit import ProbTable
from app.models.metrics import XebResult
from app.models.samples import SampleSet

logger = structlog.get_logger()


def _check_same_n(a: int, b: int, what: str) -> None:
    if a != b:
        raise DimensionMismatchError(f"{what}: {a} qubits versus {b} qubits")


def linear_xeb(sample: SampleSet, ideal: ProbTable) -> XebResult:
    """F_XEB = (2^n/M)·Σ p_ideal(x_i) − 1 with the standard error of the per-record terms.

    The per-record terms 2^n·p − 1 are reduced with numpy's pairwise
    summation, which keeps 10^6-term sums stable across the 2^n dynamic range.
    """
    _check_same_n(sample.n, ideal.n, "sample and ideal table")
    terms = ideal.N * ideal.probs[sample.to_indices()] - 1.0
    M = terms.shape[0]
    fidelity = float(np.sum(terms) / M)
    std_error = float(np.std(terms, ddof=1) / math.sqrt(M)) if M > 1 else 0.0
    result = XebResult(fidelity=max(fidelity, -1.0), std_error=std_error, M=M, n=sample.n)
    logger.info(
        "Linear XEB computed",
        label=sample.label,
        fidelity=result.fidelity,
        std_error=result.std_error,
        M=M,
        n=sample.n,
    )
    return result


def kolmogorov_distance(p: ProbTable, q: ProbTable) -> float:
    """D(p, q) = Σ_x |p(x) − q(x)| / 2."""
    _check_same_n(p.n, q.n, "kolmogorov_distance")
    value = 0.5 * float(np.sum(np.abs(p.probs - q.probs)))
    return min(max(value, 0.0), 1.0)


def bhattacharya_overlap(p: ProbTable, q: ProbTable) -> float:
    """F(p, q) = Σ_x √(p(x)·q(x))."""
    _check_same_n(p.n, q.n, "bhattacharya_overlap")
    value = float(np.sum(np.sqrt(p.probs * q.probs)))
    return min(max(value, 0.0), 1.0)


def empirical_distribution(sample: SampleSet) -> ProbTable:
    """Observed frequency of every n-bit string as a dense table."""
    if sample.n > settings.SIMULATOR_MAX_QUBITS:
        raise SimulatorLimitError(
            f"dense tables are limited to {settings.SIMULATOR_MAX_QUBITS} qubits"
        )
    counts = np.bincount(sample.to_indices(), minlength=2**sample.n)
    return ProbTable(probs=counts / sample.M, n=sample.n)
