"""One-dimensional Wasserstein distances between bit-string samples."""

from typing import Dict, List, Optional, Tuple

import numpy as np
import ot
import structlog

from app.core.config import settings
from app.core.exceptions import InsufficientDataError
from app.models.metrics import ValueSeries, WassersteinResult
from app.models.samples import SampleSet

logger = structlog.get_logger()

BACKENDS = ("order-statistic", "pot")
LENGTH_POLICIES = ("truncate", "subsample")


def to_values(sample: SampleSet) -> ValueSeries:
    """Map every row to integer(x)/2^n, qubit 0 most significant.

    Weights 2^−(j+1) are exact powers of two, so the float64 sum is exact
    for n ≤ 53; longer strings keep their leading 53 bits of precision.
    """
    weights = np.ldexp(1.0, -np.arange(1, sample.n + 1))
    values = sample.bits.astype(np.float64) @ weights
    # Rounding past 53 bits can reach 1.0 for all-ones rows.
    np.minimum(values, np.nextafter(1.0, 0.0), out=values)
    return ValueSeries(values=values, n_source=sample.n)


def _align(
    a: np.ndarray, b: np.ndarray, policy: str, seed: int
) -> Tuple[np.ndarray, np.ndarray, bool]:
    if a.size == b.size:
        return a, b, False
    M = min(a.size, b.size)
    if policy == "truncate":
        return a[:M], b[:M], True
    rng = np.random.default_rng(seed)
    longer_is_a = a.size > b.size
    longer = a if longer_is_a else b
    picked = longer[np.sort(rng.choice(longer.size, size=M, replace=False))]
    return (picked, b, True) if longer_is_a else (a, picked, True)


def wasserstein(
    a: ValueSeries,
    b: ValueSeries,
    alpha: float = 1.0,
    length_policy: Optional[str] = None,
    backend: Optional[str] = None,
    seed: Optional[int] = None,
) -> WassersteinResult:
    """W_α = ((1/M)·Σ|a_(i) − b_(i)|^α)^(1/α) over the sorted series.

    Series of different lengths are cut to the shorter one, either by
    keeping the leading records or by a seeded subsample of the longer.
    """
    if alpha < 1.0:
        raise ValueError(f"alpha must be at least 1, got {alpha}")
    if a.M == 0 or b.M == 0:
        raise InsufficientDataError("cannot compare an empty series")
    policy = length_policy or settings.WASSERSTEIN_LENGTH_POLICY
    backend = backend or settings.WASSERSTEIN_BACKEND
    if policy not in LENGTH_POLICIES:
        raise ValueError(f"unknown length policy {policy!r}")
    if backend not in BACKENDS:
        raise ValueError(f"unknown Wasserstein backend {backend!r}")

    x, y, truncated = _align(
        a.values, b.values, policy, settings.DEFAULT_SEED if seed is None else seed
    )
    if truncated:
        logger.warning(
            "Wasserstein inputs have different lengths",
            a=a.M,
            b=b.M,
            used=x.size,
            policy=policy,
        )

    if backend == "pot":
        # POT returns the transport cost, W_α raised to the power α.
        cost = float(ot.wasserstein_1d(x, y, p=alpha))
        distance = max(cost, 0.0) ** (1.0 / alpha)
    else:
        gaps = np.abs(np.sort(x) - np.sort(y))
        if alpha == 1.0:
            distance = float(np.mean(gaps))
        else:
            distance = float(np.mean(gaps**alpha) ** (1.0 / alpha))

    return WassersteinResult(
        distance=max(distance, 0.0),
        alpha=alpha,
        M_used=int(x.size),
        truncated=truncated,
        length_policy=policy,
        backend=backend,
    )


def pairwise_wasserstein(
    series: Dict[str, ValueSeries],
    alpha: float = 1.0,
    reference: Optional[str] = None,
    length_policy: Optional[str] = None,
    backend: Optional[str] = None,
    seed: Optional[int] = None,
) -> Dict[str, Dict[str, float]]:
    """Symmetric distance matrix over all labels, or only the reference row.

    The diagonal is zero. With a reference, the result holds a single row
    keyed by the reference label. ``seed`` drives the subsample length policy.
    """
    labels: List[str] = list(series)
    if reference is not None and reference not in series:
        raise KeyError(f"reference {reference!r} is not among the inputs")

    rows = [reference] if reference is not None else labels
    matrix: Dict[str, Dict[str, float]] = {row: {} for row in rows}
    for row in rows:
        for col in labels:
            if col == row:
                matrix[row][col] = 0.0
                continue
            if reference is None and col in matrix and row in matrix[col]:
                matrix[row][col] = matrix[col][row]
                continue
            result = wasserstein(
                series[row],
                series[col],
                alpha,
                length_policy=length_policy,
                backend=backend,
                seed=seed,
            )
            matrix[row][col] = result.distance
    logger.info("Pairwise Wasserstein computed", inputs=len(labels), reference=reference)
    return matrix
