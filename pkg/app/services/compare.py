"""Batch comparison of samples and report emission."""

import hashlib
from concurrent.futures import Future, ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple, Union

import orjson
import pandas as pd
import structlog

from app import __version__
from app.core.config import settings
from app.core.dependencies import get_worker_pool
from app.core.exceptions import ConfigurationError
from app.models.circuit import ProbTable
from app.models.report import (
    METRICS,
    CircuitInput,
    CompareConfig,
    FileInput,
    IdealCircuit,
    IdealFile,
    InputRecord,
    MetricReport,
    ReportError,
    SpoofInput,
    UniformInput,
    WassersteinInfo,
)
from app.models.samples import SampleSet
from app.services import (
    circuit_engine,
    randomness_tests,
    sample_store,
    spectral_analysis,
    transport_metrics,
    xeb_metrics,
)
from app.services.exporters import load_prob_table

logger = structlog.get_logger()

PathLike = Union[str, Path]
_HASH_CHUNK = 1 << 20


@dataclass
class LoadedInput:
    label: str
    sample: SampleSet
    record: InputRecord
    own_ideal: Optional[ProbTable] = None


def file_sha256(path: PathLike) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(_HASH_CHUNK), b""):
            digest.update(chunk)
    return digest.hexdigest()


def load_compare_config(path: PathLike) -> CompareConfig:
    """Read and validate a JSON compare configuration."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as e:
        raise OSError(f"{path}: {e.strerror or e}") from e
    try:
        return CompareConfig.model_validate_json(raw)
    except ValueError as e:
        raise ConfigurationError(f"{path}: {e}") from e


class CompareRunner:
    """Loads every input, runs the requested metrics on a worker pool and assembles the report.

    A failure in one input or one metric becomes an entry in ``errors``;
    everything else still completes.
    """

    def __init__(self, config: CompareConfig, pool: Optional[ThreadPoolExecutor] = None) -> None:
        self.config = config
        self.params = config.params
        self.pool = pool
        self.errors: List[ReportError] = []
        self.loaded: Dict[str, LoadedInput] = {}

    # ------------------------------------------------------------ inputs

    def _load_input(self, index: int) -> LoadedInput:
        spec = self.config.inputs[index]
        label = spec.resolved_label(index)
        echo = spec.model_dump(mode="json")
        own_ideal: Optional[ProbTable] = None
        sha256: Optional[str] = None
        descriptor = None

        if isinstance(spec, FileInput):
            sample = sample_store.parse_sample_file(spec.path, expected_n=spec.expected_n)
            sha256 = file_sha256(spec.path)
            descriptor = sample.descriptor
        elif isinstance(spec, UniformInput):
            sample = sample_store.generate_uniform(spec.n, spec.M, spec.seed)
        elif isinstance(spec, SpoofInput):
            sample = sample_store.generate_spoof(
                spec.n, spec.M, spec.seed, spec.prefix_len, spec.fixed_value
            )
        elif isinstance(spec, CircuitInput):
            state = circuit_engine.simulate_spec(spec.circuit_spec())
            own_ideal = state.prob_table()
            sample = circuit_engine.sample_bitstrings(own_ideal, spec.M, spec.sample_seed)
        else:
            raise ConfigurationError(f"unsupported input kind {spec.kind!r}")

        sample = sample.model_copy(update={"label": label})
        record = InputRecord(
            label=label,
            kind=spec.kind,
            spec=echo,
            n=sample.n,
            M=sample.M,
            sha256=sha256,
            descriptor=descriptor,
        )
        return LoadedInput(label=label, sample=sample, record=record, own_ideal=own_ideal)

    def _load_ideal(self) -> Optional[ProbTable]:
        ideal = self.config.ideal
        if ideal is None:
            return None
        if isinstance(ideal, IdealFile):
            return load_prob_table(ideal.path)
        if isinstance(ideal, IdealCircuit):
            return circuit_engine.simulate_spec(ideal.circuit_spec()).prob_table()
        raise ConfigurationError(f"unsupported ideal kind {ideal.kind!r}")

    def _record_error(self, label: str, metric: str, error: BaseException) -> None:
        logger.error(
            "Compare job failed",
            input=label,
            metric=metric,
            error=str(error),
            error_type=type(error).__name__,
        )
        self.errors.append(ReportError(input=label, metric=metric, error=f"{type(error).__name__}: {error}"))

    # ------------------------------------------------------------ metrics

    def _xeb_job(self, loaded: LoadedInput, shared_ideal: Optional[ProbTable]) -> Any:
        ideal = shared_ideal if shared_ideal is not None else loaded.own_ideal
        if ideal is None:
            raise ConfigurationError("no ideal table available for this input")
        return xeb_metrics.linear_xeb(loaded.sample, ideal)

    def _nist_job(self, loaded: LoadedInput) -> Any:
        return randomness_tests.run_battery(loaded.sample, alpha=self.params.nist_alpha)

    def _heatmap_job(self, loaded: LoadedInput) -> Any:
        return spectral_analysis.heat_map(loaded.sample).summary()

    def _spectrum_job(self, loaded: LoadedInput) -> Any:
        spectrum = spectral_analysis.sample_spectrum(
            loaded.sample, k=self.params.k, estimator=self.params.outlier_estimator
        )
        fit = None
        fit_error: Optional[Exception] = None
        if self.params.bulk_fit:
            try:
                fit = spectral_analysis.bulk_fit_report(spectrum)
            except ValueError as e:
                fit_error = e
        return spectrum.summary(fit), fit_error

    def _submit_metrics(
        self,
        pool: ThreadPoolExecutor,
        loaded: Dict[str, LoadedInput],
        ideal: Optional[ProbTable],
    ) -> List[Tuple[str, str, "Future[Any]"]]:
        jobs: Dict[str, Callable[[LoadedInput], Any]] = {
            "xeb": lambda item: self._xeb_job(item, ideal),
            "nist": self._nist_job,
            "heatmap": self._heatmap_job,
            "spectrum": self._spectrum_job,
        }
        futures = []
        for label, item in loaded.items():
            for metric in METRICS:
                if metric in jobs and metric in self.config.metrics:
                    futures.append((label, metric, pool.submit(jobs[metric], item)))
        return futures

    def _wasserstein(self, loaded: Dict[str, LoadedInput], report: MetricReport) -> None:
        alpha = self.params.wasserstein_alpha
        policy = self.params.length_policy or settings.WASSERSTEIN_LENGTH_POLICY
        backend = self.params.backend or settings.WASSERSTEIN_BACKEND
        reference = self.params.reference
        if reference is not None and reference not in loaded:
            self._record_error(reference, "wdist", ConfigurationError("reference input failed to load"))
            return
        series = {label: transport_metrics.to_values(item.sample) for label, item in loaded.items()}
        report.wasserstein_matrix = transport_metrics.pairwise_wasserstein(
            series,
            alpha=alpha,
            reference=reference,
            length_policy=policy,
            backend=backend,
            seed=self.config.seed,
        )
        labels = list(series)
        truncated = [
            [a, b]
            for i, a in enumerate(labels)
            for b in labels[i + 1 :]
            if series[a].M != series[b].M
            and (reference is None or reference in (a, b))
        ]
        report.wasserstein = WassersteinInfo(
            alpha=alpha,
            backend=backend,
            length_policy=policy,
            reference=reference,
            truncated_pairs=truncated,
        )

    # ------------------------------------------------------------ assembly

    def parameters(self) -> Dict[str, Any]:
        """Every tunable that shaped the numbers in the report."""
        p = self.params
        return {
            "nist_alpha": p.nist_alpha,
            "nist_block_size": settings.NIST_BLOCK_SIZE,
            "nist_apen_m": settings.NIST_APEN_M,
            "nist_min_stream_bits": settings.NIST_MIN_STREAM_BITS,
            "k": p.k,
            "slice_factor": settings.SLICE_FACTOR,
            "outlier_estimator": p.outlier_estimator or settings.OUTLIER_ESTIMATOR,
            "histogram_bins": settings.HISTOGRAM_BINS,
            "eigen_residual_tol": settings.EIGEN_RESIDUAL_TOL,
            "trace_tol": settings.TRACE_TOL,
            "mp_edge_tolerance": settings.MP_EDGE_TOLERANCE,
            "bulk_fit": p.bulk_fit,
            "wasserstein_alpha": p.wasserstein_alpha,
            "wasserstein_backend": p.backend or settings.WASSERSTEIN_BACKEND,
            "wasserstein_length_policy": p.length_policy or settings.WASSERSTEIN_LENGTH_POLICY,
            "wasserstein_reference": p.reference,
            "seed": self.config.seed,
        }

    def run(self) -> MetricReport:
        """Run on the given pool, a private pool of ``config.workers`` threads, or the shared one."""
        if self.pool is not None:
            return self._run(self.pool)
        if self.config.workers is not None:
            with ThreadPoolExecutor(
                max_workers=self.config.workers, thread_name_prefix="rcs-verify-run"
            ) as pool:
                return self._run(pool)
        return self._run(get_worker_pool())

    def _run(self, pool: ThreadPoolExecutor) -> MetricReport:
        labels = self.config.labels()
        logger.info("Compare run started", inputs=len(labels), metrics=self.config.metrics)

        load_futures = [pool.submit(self._load_input, i) for i in range(len(labels))]
        ideal_future = (
            pool.submit(self._load_ideal) if "xeb" in self.config.metrics else None
        )

        loaded = self.loaded
        records: List[InputRecord] = []
        for index, future in enumerate(load_futures):
            label = labels[index]
            try:
                item = future.result()
            except Exception as e:
                self._record_error(label, "load", e)
                spec = self.config.inputs[index]
                records.append(InputRecord(label=label, kind=spec.kind, spec=spec.model_dump(mode="json")))
                continue
            loaded[label] = item
            records.append(item.record)

        ideal: Optional[ProbTable] = None
        if ideal_future is not None:
            try:
                ideal = ideal_future.result()
            except Exception as e:
                self._record_error("ideal", "load", e)

        report = MetricReport(
            schema_version=settings.REPORT_SCHEMA_VERSION,
            tool_version=__version__,
            generated_at=(
                datetime.now(timezone.utc).isoformat() if self.config.include_timestamp else None
            ),
            config=self.config.model_dump(mode="json"),
            parameters=self.parameters(),
            inputs=records,
        )
        if not loaded:
            logger.error("Compare run has no valid inputs")
            report.errors = self._sorted_errors()
            return report

        for label, metric, future in self._submit_metrics(pool, loaded, ideal):
            try:
                value = future.result()
            except Exception as e:
                self._record_error(label, metric, e)
                continue
            if metric == "xeb":
                report.xeb[label] = value
            elif metric == "nist":
                report.nist[label] = value
            elif metric == "heatmap":
                report.heatmap_summary[label] = value
            elif metric == "spectrum":
                summary, fit_error = value
                report.spectrum_summary[label] = summary
                if fit_error is not None:
                    self._record_error(label, "spectrum.bulk_fit", fit_error)

        if "wdist" in self.config.metrics:
            try:
                self._wasserstein(loaded, report)
            except Exception as e:
                self._record_error("*", "wdist", e)

        report.errors = self._sorted_errors()
        logger.info("Compare run finished", inputs=len(loaded), errors=len(report.errors))
        return report

    def _sorted_errors(self) -> List[ReportError]:
        order = {label: i for i, label in enumerate(self.config.labels())}
        return sorted(
            self.errors,
            key=lambda e: (order.get(e.input, len(order)), e.input, e.metric, e.error),
        )


def run_compare(config: CompareConfig, pool: Optional[ThreadPoolExecutor] = None) -> MetricReport:
    """Run a batch comparison; raises only when no input could be loaded."""
    runner = CompareRunner(config, pool=pool)
    report = runner.run()
    if not runner.loaded:
        raise ConfigurationError(
            "no valid inputs: " + "; ".join(f"{e.input}: {e.error}" for e in report.errors)
        )
    return report


# ---------------------------------------------------------------- output


def report_table(report: MetricReport) -> pd.DataFrame:
    """One row per input per metric, errors included."""
    rows: List[Dict[str, Any]] = []
    for record in report.inputs:
        label = record.label
        if label in report.xeb:
            x = report.xeb[label]
            rows.append({"input": label, "metric": "xeb", "value": x.fidelity,
                         "detail": f"± {x.std_error:.3g} (M={x.M}, n={x.n})"})
        if label in report.nist:
            outcomes = report.nist[label]
            completed = [o for o in outcomes if not o.skipped]
            failed = [o.test_name for o in completed if not o.passed]
            rows.append({
                "input": label,
                "metric": "nist",
                "value": f"{len(completed) - len(failed)}/{len(completed)} passed",
                "detail": "failed: " + ", ".join(failed) if failed else "",
            })
        if label in report.heatmap_summary:
            h = report.heatmap_summary[label]
            rows.append({"input": label, "metric": "heatmap", "value": h.p1,
                         "detail": f"max column bias {h.max_column_bias:.4g}, L={h.L}"})
        if label in report.spectrum_summary:
            s = report.spectrum_summary[label]
            detail = f"outlier peak {s.outlier_peak:.4g}, slices {s.slices}"
            if s.ks_bulk is not None:
                detail += f", KS {s.ks_bulk:.3g}"
            rows.append({"input": label, "metric": "spectrum", "value": s.mp_distance, "detail": detail})
        if label in report.wasserstein_matrix or any(
            label in row for row in report.wasserstein_matrix.values()
        ):
            if label in report.wasserstein_matrix:
                distances = report.wasserstein_matrix[label]
            else:
                distances = {ref: row[label] for ref, row in report.wasserstein_matrix.items()}
            rows.append({
                "input": label,
                "metric": "wdist",
                "value": "",
                "detail": ", ".join(f"{other}={d:.6g}" for other, d in distances.items() if other != label),
            })
        for error in report.errors:
            if error.input == label:
                rows.append({"input": label, "metric": error.metric, "value": "ERROR", "detail": error.error})
    for error in report.errors:
        if error.input not in {r.label for r in report.inputs}:
            rows.append({"input": error.input, "metric": error.metric, "value": "ERROR", "detail": error.error})
    return pd.DataFrame(rows, columns=["input", "metric", "value", "detail"])


def _cycle_count(record: InputRecord) -> Optional[int]:
    if record.descriptor is not None and record.descriptor.m_cycles is not None:
        return record.descriptor.m_cycles
    if record.kind == "circuit" and record.spec.get("m") is not None:
        return int(record.spec["m"])
    return None


def cycle_series(report: MetricReport) -> pd.DataFrame:
    """Metrics per input against cycle count m, for inputs whose m is known.

    ``wdist`` is the distance to the configured reference input and stays
    empty when the run had no reference.
    """
    reference = report.wasserstein.reference if report.wasserstein is not None else None
    reference_row = report.wasserstein_matrix.get(reference, {}) if reference else {}
    rows: List[Dict[str, Any]] = []
    for record in report.inputs:
        m = _cycle_count(record)
        if m is None:
            continue
        xeb = report.xeb.get(record.label)
        spectrum = report.spectrum_summary.get(record.label)
        rows.append({
            "m": m,
            "input": record.label,
            "xeb": xeb.fidelity if xeb is not None else None,
            "mp_distance": spectrum.mp_distance if spectrum is not None else None,
            "wdist": reference_row.get(record.label),
        })
    table = pd.DataFrame(rows, columns=["m", "input", "xeb", "mp_distance", "wdist"])
    return table.sort_values(["m", "input"], kind="stable").reset_index(drop=True)


def render_report(report: MetricReport, fmt: str = "json") -> str:
    if fmt == "json":
        return orjson.dumps(
            report.model_dump(mode="json"), option=orjson.OPT_SORT_KEYS | orjson.OPT_INDENT_2
        ).decode() + "\n"
    if fmt == "text":
        header = (
            f"rcs-verify {report.tool_version} report "
            f"(schema {report.schema_version})\n"
        )
        table = report_table(report)
        body = table.to_string(index=False) if not table.empty else "(no results)"
        series = cycle_series(report)
        if not series.empty:
            body += "\n\nby cycle count m\n" + series.to_string(index=False)
        return header + body + "\n"
    raise ValueError(f"unknown report format {fmt!r}")


def emit_report(report: MetricReport, fmt: str = "json", path: Optional[PathLike] = None) -> str:
    """Serialize a report as JSON or a text table, writing it to ``path`` when given."""
    output = render_report(report, fmt)
    if path is not None:
        target = Path(path)
        try:
            target.write_text(output, encoding="utf-8")
        except OSError as e:
            logger.error("Failed to write report", path=str(target), error=str(e))
            raise OSError(f"{target}: {e.strerror or e}") from e
        logger.info("Report written", path=str(target), format=fmt)
    return output
