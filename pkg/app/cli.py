"""The ``rcs-verify`` command line."""

import argparse
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import orjson
import structlog

from app import __version__
from app.core.config import settings
from app.core.dependencies import get_worker_pool, shutdown_worker_pool
from app.core.exceptions import VerificationError
from app.core.logging import run_context, setup_logging
from app.models.circuit import CircuitSpec, ProbTable
from app.services import (
    circuit_engine,
    compare,
    exporters,
    randomness_tests,
    sample_store,
    spectral_analysis,
    transport_metrics,
    xeb_metrics,
)

logger = structlog.get_logger()

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_DATA_ERROR = 2


def _write_json(payload: Any) -> None:
    sys.stdout.write(
        orjson.dumps(payload, option=orjson.OPT_SORT_KEYS | orjson.OPT_INDENT_2).decode()
        + "\n"
    )


def _grid(value: str) -> Tuple[int, int]:
    try:
        rows, cols = value.lower().split("x")
        return int(rows), int(cols)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected ROWSxCOLS, got {value!r}")


def _first_set(*values: Optional[int]) -> int:
    return next(v for v in values if v is not None)


def _circuit_from_args(args: argparse.Namespace) -> CircuitSpec:
    fields: Dict[str, Any] = {
        "n_qubits": args.n,
        "m_cycles": args.m,
        "seed": _first_set(args.circuit_seed, args.seed, settings.DEFAULT_SEED),
    }
    if args.pattern:
        fields["pattern"] = args.pattern
    if args.topology:
        fields["topology"] = args.topology
    if args.grid:
        fields["grid_shape"] = args.grid
    return CircuitSpec(**fields)


# ---------------------------------------------------------------- commands


def cmd_compare(args: argparse.Namespace) -> int:
    config = compare.load_compare_config(args.config)
    updates: Dict[str, Any] = {}
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.no_timestamp:
        updates["include_timestamp"] = False
    if args.threads is not None:
        updates["workers"] = args.threads
    if updates:
        config = config.model_copy(update=updates)

    report = compare.run_compare(config)
    output = compare.emit_report(report, fmt=args.format, path=args.output)
    if args.output is None:
        sys.stdout.write(output)
    return EXIT_DATA_ERROR if args.strict and report.errors else EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    spec = _circuit_from_args(args)
    gates = circuit_engine.circuit_for(spec)
    state = circuit_engine.simulate_spec(spec)
    table = state.prob_table()
    outputs: Dict[str, str] = {}

    if args.probs_out:
        exporters.save_prob_table(table, args.probs_out)
        outputs["probabilities"] = str(args.probs_out)
    if args.samples:
        sample = circuit_engine.sample_bitstrings(table, args.samples, args.sample_seed)
        if args.samples_out:
            sample_store.write_sample_file(sample, args.samples_out)
            outputs["samples"] = str(args.samples_out)

    _write_json(
        {
            "n": spec.n_qubits,
            "m": spec.m_cycles,
            "seed": spec.seed,
            "pattern": spec.pattern,
            "topology": spec.topology.value,
            "gates": len(gates),
            "porter_thomas_ks": circuit_engine.porter_thomas_distance(table),
            "phase_ks": circuit_engine.phase_uniformity_distance(state),
            "outputs": outputs,
        }
    )
    return EXIT_OK


def cmd_xeb(args: argparse.Namespace) -> int:
    sample = sample_store.parse_sample_file(args.sample)
    ideal: ProbTable
    if args.ideal:
        ideal = exporters.load_prob_table(args.ideal)
    else:
        ideal = circuit_engine.simulate_spec(_circuit_from_args(args)).prob_table()
    result = xeb_metrics.linear_xeb(sample, ideal)
    payload = result.model_dump(mode="json")
    if args.distances:
        observed = xeb_metrics.empirical_distribution(sample)
        payload["kolmogorov_distance"] = xeb_metrics.kolmogorov_distance(observed, ideal)
        payload["bhattacharya_overlap"] = xeb_metrics.bhattacharya_overlap(observed, ideal)
    _write_json(payload)
    return EXIT_OK


def cmd_nist(args: argparse.Namespace) -> int:
    sample = sample_store.parse_sample_file(args.sample)
    alpha = args.alpha if args.alpha is not None else settings.NIST_ALPHA
    outcomes = randomness_tests.run_battery(sample, alpha=alpha)
    _write_json([o.model_dump(mode="json") for o in outcomes])
    completed = [o for o in outcomes if not o.skipped]
    return EXIT_OK if not args.strict or all(o.passed for o in completed) else EXIT_DATA_ERROR


def cmd_heatmap(args: argparse.Namespace) -> int:
    if args.stream:
        accumulator: Optional[spectral_analysis.HeatMapAccumulator] = None
        for block in sample_store.iter_sample_blocks(args.sample):
            if accumulator is None:
                accumulator = spectral_analysis.HeatMapAccumulator(block.n)
            accumulator.add(block)
        assert accumulator is not None
        heat = accumulator.result()
    else:
        heat = spectral_analysis.heat_map(sample_store.parse_sample_file(args.sample))

    if args.csv:
        exporters.save_heat_map_csv(heat, args.csv)
    if args.sliced_csv:
        exporters.save_heat_map_csv(heat, args.sliced_csv, sliced=True)
    if args.pgm:
        exporters.save_heat_map_pgm(heat, args.pgm)
    payload = heat.summary().model_dump(mode="json")
    payload["warnings"] = heat.warnings
    _write_json(payload)
    return EXIT_OK


def cmd_spectrum(args: argparse.Namespace) -> int:
    sample = sample_store.parse_sample_file(args.sample)
    spectrum = spectral_analysis.sample_spectrum(sample, k=args.k, estimator=args.estimator)
    fit = None
    payload: Dict[str, Any] = {}
    if not args.no_fit:
        try:
            fit = spectral_analysis.bulk_fit_report(spectrum)
            payload["fit"] = fit.model_dump(mode="json")
        except VerificationError as e:
            logger.warning("Bulk fit rejected", error=str(e))
            payload["fit_error"] = str(e)
    if args.csv:
        exporters.save_spectrum(spectrum, args.csv, summary_path=args.summary, fit=fit)
    payload["summary"] = spectrum.summary(fit).model_dump(mode="json")
    _write_json(payload)
    return EXIT_OK


def cmd_wdist(args: argparse.Namespace) -> int:
    a = transport_metrics.to_values(sample_store.parse_sample_file(args.a))
    b = transport_metrics.to_values(sample_store.parse_sample_file(args.b))
    result = transport_metrics.wasserstein(
        a,
        b,
        args.alpha,
        length_policy=args.length_policy,
        backend=args.backend,
        seed=args.seed,
    )
    _write_json(result.model_dump(mode="json"))
    return EXIT_OK


# ---------------------------------------------------------------- parser


def _add_global_options(parser: argparse.ArgumentParser, suppress: bool) -> None:
    default: Any = argparse.SUPPRESS if suppress else None
    parser.add_argument("--seed", type=int, default=default, help="Seed override")
    parser.add_argument("--threads", type=int, default=default, help="Worker threads")
    parser.add_argument(
        "--no-timestamp",
        action="store_true",
        default=argparse.SUPPRESS if suppress else False,
        help="Omit generated_at so reports are byte-reproducible",
    )
    parser.add_argument(
        "--log-level",
        choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
        default=default,
    )
    parser.add_argument("--log-format", choices=["json", "plain"], default=default)


def _add_circuit_options(parser: argparse.ArgumentParser, required: bool) -> None:
    parser.add_argument("--n", type=int, required=required, help="Qubits")
    parser.add_argument("--m", type=int, required=required, help="Cycles")
    parser.add_argument("--circuit-seed", type=int, help="Circuit seed (defaults to --seed)")
    parser.add_argument("--pattern", help="Coupler pattern over A-D")
    parser.add_argument("--topology", choices=["ring", "grid"])
    parser.add_argument("--grid", type=_grid, help="Grid shape ROWSxCOLS")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rcs-verify",
        description="Certify and compare bit-string samples from random circuit sampling",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _add_global_options(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name: str, handler: Callable[[argparse.Namespace], int], help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        _add_global_options(p, suppress=True)
        p.set_defaults(handler=handler)
        return p

    p = command("compare", cmd_compare, "Run a batch comparison from a JSON config")
    p.add_argument("--config", required=True, type=Path)
    p.add_argument("--format", choices=["json", "text"], default="json")
    p.add_argument("--output", type=Path, help="Write the report here instead of stdout")
    p.add_argument("--strict", action="store_true", help="Exit 2 when the report holds errors")

    p = command("simulate", cmd_simulate, "Simulate a circuit and export its distribution")
    _add_circuit_options(p, required=True)
    p.add_argument("--samples", type=int, default=0, help="Bit strings to draw")
    p.add_argument("--sample-seed", type=int, default=0)
    p.add_argument("--probs-out", type=Path, help="Probability table (.npy or .csv)")
    p.add_argument("--samples-out", type=Path, help="Sample file")

    p = command("xeb", cmd_xeb, "Linear XEB of a sample against an ideal table")
    p.add_argument("sample", type=Path)
    _add_circuit_options(p, required=False)
    p.add_argument("--ideal", type=Path, help="Probability table (.npy or .csv)")
    p.add_argument(
        "--distances",
        action="store_true",
        help="Also report Kolmogorov distance and Bhattacharya overlap",
    )

    p = command("nist", cmd_nist, "Randomness test battery")
    p.add_argument("sample", type=Path)
    p.add_argument("--alpha", type=float)
    p.add_argument("--strict", action="store_true", help="Exit 2 when any test fails")

    p = command("heatmap", cmd_heatmap, "Per-qubit and sliced bit-1 frequencies")
    p.add_argument("sample", type=Path)
    p.add_argument("--csv", type=Path, help="Per-qubit means CSV")
    p.add_argument("--sliced-csv", type=Path, help="Sliced n×n matrix CSV")
    p.add_argument("--pgm", type=Path, help="8-bit PGM image")
    p.add_argument("--stream", action="store_true", help="Read the file in row blocks")

    p = command("spectrum", cmd_spectrum, "Gram spectrum and Marchenko–Pastur distance")
    p.add_argument("sample", type=Path)
    p.add_argument("--k", type=int, help="Slice rows (default 2n)")
    p.add_argument("--estimator", choices=["median", "mean"])
    p.add_argument("--csv", type=Path, help="Eigenvalue CSV")
    p.add_argument("--summary", type=Path, help="JSON summary (with --csv)")
    p.add_argument("--no-fit", action="store_true")

    p = command("wdist", cmd_wdist, "Wasserstein distance between two samples")
    p.add_argument("--a", required=True, type=Path)
    p.add_argument("--b", required=True, type=Path)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--length-policy", choices=["truncate", "subsample"])
    p.add_argument("--backend", choices=["order-statistic", "pot"])

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(level=args.log_level, log_format=args.log_format)

    if args.command == "xeb" and not args.ideal and (args.n is None or args.m is None):
        parser.error("xeb needs --ideal or a circuit (--n and --m)")

    try:
        if args.threads is not None:
            get_worker_pool(args.threads)
        with run_context(args.command, seed=args.seed):
            return int(args.handler(args))
    except (VerificationError, OSError, ValueError) as e:
        logger.error("Command failed", command=args.command, error=str(e))
        sys.stderr.write(f"rcs-verify {args.command}: {e}\n")
        return EXIT_DATA_ERROR
    except Exception as e:
        logger.error("Unexpected failure", command=args.command, error=str(e), exc_info=True)
        sys.stderr.write(f"rcs-verify {args.command}: unexpected error: {e}\n")
        return EXIT_UNEXPECTED
    finally:
        shutdown_worker_pool()


def run(argv: Optional[List[str]] = None) -> None:
    sys.exit(main(argv))


if __name__ == "__main__":
    run()
