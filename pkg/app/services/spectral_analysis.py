"""Heat maps and the Marchenko–Pastur spectral pipeline.

A sample matrix is cut into k×n slices X. Writing X = (Y + J)/2 with Y a
±1 matrix and J the all-ones matrix, the Gram matrix (1/k)XᵀX is the sum
of a Marchenko–Pastur bulk (variance σ² = 1/4 for fair bits) and a rank-one
term whose eigenvalue sits near n/4. The per-slice largest eigenvalue is
the outlier; its distance from n/4 measures how far the sample departs
from unbiased i.i.d. bits.
"""

import math
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import structlog
from scipy import integrate, stats

from app.core.config import settings
from app.core.exceptions import (
    DegenerateSpectrumError,
    DimensionMismatchError,
    InsufficientDataError,
)
from app.models.metrics import BulkFitReport, HeatMap, SpectrumResult
from app.models.samples import SampleSet

logger = structlog.get_logger()

NEAR_ZERO_EIGENVALUE = 1e-9
PSD_TOL = 1e-10
MIN_BULK_VALUES = 100
_CDF_GRID_POINTS = 4097
_HISTOGRAM_MARGIN = 0.05

ArrayLike = Union[float, np.ndarray]


class HeatMapAccumulator:
    """Builds a HeatMap from row blocks streamed in file order.

    Rows that do not complete an n×n slice are carried into the next block,
    so the result matches the in-memory computation exactly.
    """

    def __init__(self, n: int) -> None:
        if n < 1:
            raise ValueError("n must be at least 1")
        self.n = n
        self.rows = 0
        self.slices = 0
        self._column_ones = np.zeros(n, dtype=np.int64)
        self._slice_ones = np.zeros((n, n), dtype=np.int64)
        self._carry = np.zeros((0, n), dtype=np.uint8)

    def add(self, bits: Union[np.ndarray, SampleSet]) -> None:
        block = bits.bits if isinstance(bits, SampleSet) else np.asarray(bits, dtype=np.uint8)
        if block.ndim != 2 or block.shape[1] != self.n:
            raise DimensionMismatchError(
                f"block of shape {block.shape} does not hold {self.n}-bit rows"
            )
        self.rows += block.shape[0]
        self._column_ones += block.sum(axis=0, dtype=np.int64)

        pending = np.concatenate([self._carry, block]) if self._carry.size else block
        full = pending.shape[0] // self.n
        if full:
            squares = pending[: full * self.n].reshape(full, self.n, self.n)
            self._slice_ones += squares.sum(axis=0, dtype=np.int64)
            self.slices += full
        self._carry = pending[full * self.n :].copy()

    def result(self) -> HeatMap:
        if self.rows == 0:
            raise InsufficientDataError("no records")
        per_qubit = self._column_ones / self.rows
        p1 = float(self._column_ones.sum() / (self.rows * self.n))
        warnings: List[str] = []
        sliced: Optional[np.ndarray] = None
        if self.slices:
            sliced = self._slice_ones / self.slices
        else:
            message = f"M = {self.rows} < n = {self.n}: sliced heat map omitted"
            warnings.append(message)
            logger.warning("Sliced heat map omitted", M=self.rows, n=self.n)
        return HeatMap(
            per_qubit_mean=per_qubit,
            sliced_mean=sliced,
            p1=min(max(p1, 0.0), 1.0),
            n=self.n,
            M=self.rows,
            L=self.slices,
            warnings=warnings,
        )


def heat_map(sample: SampleSet) -> HeatMap:
    """Per-qubit bit-1 frequencies and the mean over L = ⌊M/n⌋ consecutive n×n slices."""
    accumulator = HeatMapAccumulator(sample.n)
    accumulator.add(sample.bits)
    result = accumulator.result()
    logger.info(
        "Heat map computed",
        label=sample.label,
        p1=result.p1,
        max_column_bias=result.max_column_bias,
        L=result.L,
    )
    return result


def slice_matrices(sample: SampleSet, k: Optional[int] = None) -> List[np.ndarray]:
    """⌊M/k⌋ disjoint consecutive k×n row blocks; a trailing partial block is dropped."""
    if k is None:
        k = settings.SLICE_FACTOR * sample.n
    if k < 1:
        raise ValueError(f"k must be at least 1, got {k}")
    if sample.M < k:
        raise InsufficientDataError(
            f"{sample.M} records cannot fill one {k}×{sample.n} slice"
        )
    count = sample.M // k
    stacked = sample.bits[: count * k].reshape(count, k, sample.n)
    return list(stacked)


def _eigen_chunk(
    chunk: np.ndarray, k: int
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Eigenvalues of (1/k)XᵀX for a stack of slices, with residual and trace errors.

    Returns (eigenvalues, residuals, trace_errors, ok) where ``ok`` flags the
    slices whose decomposition met the tolerances.
    """
    X = chunk.astype(np.float64)
    gram = np.matmul(X.transpose(0, 2, 1), X) / k
    count = X.shape[0]
    n = X.shape[2]

    try:
        w, v = np.linalg.eigh(gram)
        solved = np.ones(count, dtype=bool)
    except np.linalg.LinAlgError:
        w = np.full((count, n), np.nan)
        v = np.full((count, n, n), np.nan)
        solved = np.zeros(count, dtype=bool)
        for i in range(count):
            try:
                w[i], v[i] = np.linalg.eigh(gram[i])
                solved[i] = True
            except np.linalg.LinAlgError:
                continue

    residual = np.linalg.norm(np.matmul(gram, v) - v * w[:, None, :], axis=1).max(axis=1)
    ones = X.sum(axis=(1, 2))
    trace_error = np.abs(w.sum(axis=1) - ones / k)
    ok = (
        solved
        & (residual <= settings.EIGEN_RESIDUAL_TOL)
        & (trace_error <= settings.TRACE_TOL)
        & (w.min(axis=1, initial=0.0) >= -PSD_TOL)
    )
    return w, residual, trace_error, ok


def _histogram(bulk: np.ndarray, upper: float) -> Tuple[np.ndarray, np.ndarray]:
    rule = settings.HISTOGRAM_BINS
    bins: Union[int, str] = int(rule) if rule.isdigit() else rule
    edges = np.histogram_bin_edges(bulk, bins=bins, range=(0.0, upper))
    density, edges = np.histogram(bulk, bins=edges, density=True)
    return density, edges


def gram_spectrum(
    slices: Union[Sequence[np.ndarray], np.ndarray],
    estimator: Optional[str] = None,
) -> SpectrumResult:
    """Eigen-decompose every slice Gram matrix and locate the outlier peak.

    Per slice the largest eigenvalue is the outlier and the remaining n − 1
    form the bulk. The peak is the median (or mean) of the outliers and the
    MP distance is |peak − n/4|. Slices whose decomposition fails the
    residual, trace or PSD checks are skipped with a warning.
    """
    estimator = estimator or settings.OUTLIER_ESTIMATOR
    if estimator not in ("median", "mean"):
        raise ValueError(f"unknown outlier estimator {estimator!r}")
    if len(slices) == 0:
        raise InsufficientDataError("no slices")
    shape = np.shape(slices[0])
    if len(shape) != 2:
        raise DimensionMismatchError(f"slices must be matrices, got shape {shape}")
    for index, item in enumerate(slices):
        if np.shape(item) != shape:
            raise DimensionMismatchError(
                f"slice {index} has shape {np.shape(item)}, expected {shape}"
            )
    k, n = shape

    values: List[np.ndarray] = []
    skipped: List[int] = []
    max_residual = 0.0
    max_trace_error = 0.0
    chunk_size = settings.SPECTRUM_CHUNK_SLICES

    for start in range(0, len(slices), chunk_size):
        chunk = np.asarray(slices[start : start + chunk_size])
        w, residual, trace_error, ok = _eigen_chunk(chunk, k)
        for offset in np.flatnonzero(~ok):
            skipped.append(start + int(offset))
        if ok.any():
            max_residual = max(max_residual, float(residual[ok].max()))
            max_trace_error = max(max_trace_error, float(trace_error[ok].max()))
            values.append(w[ok])

    if skipped:
        logger.warning("Spectrum slices skipped", count=len(skipped), first=skipped[:10])
    if not values:
        raise InsufficientDataError("every slice failed the eigensolver checks")

    w = np.clip(np.concatenate(values), 0.0, None)
    outliers = np.sort(w[:, -1])
    bulk = np.sort(w[:, :-1].reshape(-1))
    eigenvalues = np.sort(w.reshape(-1))
    peak = float(np.median(outliers) if estimator == "median" else np.mean(outliers))
    gamma = n / k

    sigma2_hat = float(bulk.mean()) if bulk.size else 0.0
    upper = max(mp_support(sigma2_hat, min(gamma, 1.0))[1] if sigma2_hat > 0 else 0.0,
                float(bulk.max()) if bulk.size else 0.0)
    upper = upper * (1.0 + _HISTOGRAM_MARGIN) if upper > 0 else 1.0
    density, edges = _histogram(bulk, upper) if bulk.size else (np.zeros(0), np.zeros(0))

    result = SpectrumResult(
        eigenvalues=eigenvalues,
        outliers=outliers,
        bulk=bulk,
        bulk_histogram=density.tolist(),
        bin_edges=edges.tolist(),
        outlier_peak=peak,
        mp_distance=abs(peak - n / 4),
        gamma=gamma,
        k=k,
        n=n,
        slices=int(w.shape[0]),
        estimator=estimator,
        skipped_slices=skipped,
        max_trace_error=max_trace_error,
        max_residual=max_residual,
        near_zero_fraction=float(np.mean(eigenvalues < NEAR_ZERO_EIGENVALUE)),
    )
    logger.info(
        "Spectrum computed",
        slices=result.slices,
        k=k,
        n=n,
        outlier_peak=peak,
        mp_distance=result.mp_distance,
        near_zero_fraction=result.near_zero_fraction,
    )
    return result


def sample_spectrum(
    sample: SampleSet, k: Optional[int] = None, estimator: Optional[str] = None
) -> SpectrumResult:
    """Slice a sample and compute its Gram spectrum."""
    return gram_spectrum(slice_matrices(sample, k), estimator=estimator)


def _check_mp_parameters(sigma2: float, gamma: float) -> None:
    if not sigma2 > 0.0:
        raise ValueError(f"sigma2 must be positive, got {sigma2}")
    if not 0.0 < gamma <= 1.0:
        raise ValueError(f"gamma must lie in (0, 1], got {gamma}")


def mp_support(sigma2: float, gamma: float) -> Tuple[float, float]:
    """λ± = σ²(1 ± √γ)²."""
    _check_mp_parameters(sigma2, gamma)
    root = math.sqrt(gamma)
    return sigma2 * (1.0 - root) ** 2, sigma2 * (1.0 + root) ** 2


def mp_density(lam: ArrayLike, sigma2: float, gamma: float) -> ArrayLike:
    """ρ(λ) = √((λ₊ − λ)(λ − λ₋)) / (2πσ²γλ) inside (λ₋, λ₊), zero outside."""
    lower, upper = mp_support(sigma2, gamma)
    x = np.asarray(lam, dtype=np.float64)
    inside = (x > lower) & (x < upper) & (x > 0.0)
    safe = np.where(inside, x, 1.0)
    density = np.where(
        inside,
        np.sqrt(np.clip((upper - safe) * (safe - lower), 0.0, None))
        / (2.0 * math.pi * sigma2 * gamma * safe),
        0.0,
    )
    if density.ndim == 0:
        return float(density)
    return density


def mp_normalization(sigma2: float, gamma: float) -> float:
    """∫ρ dλ over the support by algebraic-weight quadrature.

    The square-root endpoint behaviour goes into the quadrature weight; at
    γ = 1 the λ⁻¹ᐟ² singularity at the origin does too.
    """
    lower, upper = mp_support(sigma2, gamma)
    scale = 1.0 / (2.0 * math.pi * sigma2 * gamma)
    if lower == 0.0:
        value, _ = integrate.quad(
            lambda _x: scale, lower, upper, weight="alg", wvar=(-0.5, 0.5)
        )
    else:
        value, _ = integrate.quad(
            lambda x: scale / x, lower, upper, weight="alg", wvar=(0.5, 0.5)
        )
    return float(value)


class MarchenkoPastur:
    """The Marchenko–Pastur law with variance σ² and ratio γ = n/k ≤ 1."""

    def __init__(self, sigma2: float, gamma: float) -> None:
        self.sigma2 = sigma2
        self.gamma = gamma
        self.lower, self.upper = mp_support(sigma2, gamma)
        self._grid, self._cumulative = self._build_cdf()

    @property
    def support(self) -> Tuple[float, float]:
        return self.lower, self.upper

    @property
    def mean(self) -> float:
        return self.sigma2

    def pdf(self, x: ArrayLike) -> ArrayLike:
        return mp_density(x, self.sigma2, self.gamma)

    def _build_cdf(self) -> Tuple[np.ndarray, np.ndarray]:
        # λ = a + (b − a)(1 − cos φ)/2 turns the square-root edges into sin² φ.
        a, b = self.lower, self.upper
        phi = np.linspace(0.0, math.pi, _CDF_GRID_POINTS)
        lam = a + (b - a) * (1.0 - np.cos(phi)) / 2.0
        half_width = (b - a) / 2.0
        scale = 2.0 * math.pi * self.sigma2 * self.gamma
        integrand = np.empty_like(phi)
        positive = lam > 0.0
        integrand[positive] = (half_width * np.sin(phi[positive])) ** 2 / (
            scale * lam[positive]
        )
        # Only reachable at γ = 1, where the limit is b/(2πσ²γ).
        integrand[~positive] = b / scale
        cumulative = integrate.cumulative_trapezoid(integrand, phi, initial=0.0)
        return lam, cumulative / cumulative[-1]

    def cdf(self, x: ArrayLike) -> ArrayLike:
        value = np.interp(np.asarray(x, dtype=np.float64), self._grid, self._cumulative, left=0.0, right=1.0)
        if np.ndim(value) == 0:
            return float(value)
        return value


def tracy_widom_scale(sigma2: float, k: int, n: int) -> float:
    """Fluctuation scale of the largest eigenvalue of (1/k)XᵀX for a k×n matrix."""
    return sigma2 * (math.sqrt(k) + math.sqrt(n)) * (1.0 / math.sqrt(k) + 1.0 / math.sqrt(n)) ** (1.0 / 3.0) / k


def bulk_fit_report(
    spectrum: SpectrumResult, edge_tolerance: Optional[str] = None
) -> BulkFitReport:
    """Fit σ² to the bulk mean and test the bulk against the fitted law.

    The in-support fraction widens both edges by one Tracy–Widom scale so
    that finite-size edge fluctuations are not counted as escapes; the
    strict fraction uses the bare support.
    """
    bulk = spectrum.bulk
    if bulk.size < MIN_BULK_VALUES:
        raise InsufficientDataError(
            f"bulk fit needs at least {MIN_BULK_VALUES} eigenvalues, got {bulk.size}"
        )
    if float(np.std(bulk)) == 0.0:
        raise DegenerateSpectrumError(
            f"bulk eigenvalues are all equal to {float(bulk[0])}"
        )
    if spectrum.gamma > 1.0:
        raise DegenerateSpectrumError(
            f"gamma = {spectrum.gamma} exceeds 1; choose k ≥ n"
        )

    sigma2 = float(bulk.mean())
    law = MarchenkoPastur(sigma2, spectrum.gamma)
    ks = stats.kstest(bulk, law.cdf)

    tolerance = edge_tolerance or settings.MP_EDGE_TOLERANCE
    margin = tracy_widom_scale(sigma2, spectrum.k, spectrum.n) if tolerance == "tracy-widom" else 0.0
    inside = (bulk >= law.lower) & (bulk <= law.upper)
    widened = (bulk >= law.lower - margin) & (bulk <= law.upper + margin)

    report = BulkFitReport(
        sigma2=sigma2,
        gamma=spectrum.gamma,
        lambda_minus=law.lower,
        lambda_plus=law.upper,
        ks_distance=float(ks.statistic),
        in_support_fraction=float(inside.mean()),
        edge_in_support_fraction=float(widened.mean()),
        edge_margin=margin,
        bulk_count=int(bulk.size),
    )
    logger.info(
        "Bulk fit computed",
        sigma2=sigma2,
        ks_distance=report.ks_distance,
        in_support_fraction=report.in_support_fraction,
    )
    return report
