"""File formats for probability tables, heat maps and spectra."""

from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np
import orjson
import pandas as pd
import structlog

from app.core.exceptions import SampleFormatError
from app.models.circuit import ProbTable
from app.models.metrics import BulkFitReport, HeatMap, SpectrumResult

logger = structlog.get_logger()

PathLike = Union[str, Path]


def _io_error(action: str, path: Path, e: OSError) -> OSError:
    logger.error(f"Failed to {action}", path=str(path), error=str(e))
    return OSError(f"{path}: {e.strerror or e}")


def _qubits_from_length(length: int, path: Path) -> int:
    n = length.bit_length() - 1
    if n < 1 or 2**n != length:
        raise SampleFormatError(
            f"table holds {length} entries, which is not a power of two ≥ 2",
            path=str(path),
        )
    return n


# ---------------------------------------------------------------- ProbTable


def save_prob_table(table: ProbTable, path: PathLike) -> None:
    """Write a table as ``.npy`` or as CSV with columns index, bitstring, probability."""
    path = Path(path)
    try:
        if path.suffix == ".npy":
            np.save(path, np.asarray(table.probs))
        else:
            indices = np.arange(table.N)
            frame = pd.DataFrame(
                {
                    "index": indices,
                    "bitstring": [format(int(i), f"0{table.n}b") for i in indices],
                    "probability": table.probs,
                }
            )
            frame.to_csv(path, index=False, float_format="%.17g")
    except OSError as e:
        raise _io_error("write probability table", path, e) from e
    logger.info("Probability table written", path=str(path), n=table.n)


def load_prob_table(path: PathLike) -> ProbTable:
    """Read a table written by ``save_prob_table``; the qubit count follows from its length."""
    path = Path(path)
    try:
        if path.suffix == ".npy":
            probs = np.load(path, allow_pickle=False)
        else:
            frame = pd.read_csv(path, dtype={"bitstring": str})
            if "probability" not in frame.columns:
                raise SampleFormatError("missing 'probability' column", path=str(path))
            if "index" in frame.columns:
                frame = frame.sort_values("index")
            probs = frame["probability"].to_numpy(dtype=np.float64)
    except OSError as e:
        raise _io_error("read probability table", path, e) from e
    except ValueError as e:
        if isinstance(e, SampleFormatError):
            raise
        raise SampleFormatError(str(e), path=str(path)) from e

    probs = np.asarray(probs, dtype=np.float64).reshape(-1)
    n = _qubits_from_length(probs.size, path)
    try:
        return ProbTable(probs=probs, n=n)
    except ValueError as e:
        raise SampleFormatError(str(e), path=str(path)) from e


# ---------------------------------------------------------------- heat maps


def save_heat_map_csv(heat: HeatMap, path: PathLike, sliced: bool = False) -> None:
    """Per-qubit means as ``qubit,mean`` rows, or the n×n sliced matrix."""
    path = Path(path)
    if sliced:
        if heat.sliced_mean is None:
            raise ValueError("heat map carries no sliced matrix")
        frame = pd.DataFrame(heat.sliced_mean)
        header = False
    else:
        frame = pd.DataFrame(
            {"qubit": np.arange(heat.n), "mean": heat.per_qubit_mean}
        )
        header = True
    try:
        frame.to_csv(path, index=False, header=header, float_format="%.10g")
    except OSError as e:
        raise _io_error("write heat map", path, e) from e
    logger.info("Heat map written", path=str(path), sliced=sliced)


def heat_map_pgm(heat: HeatMap) -> bytes:
    """8-bit binary PGM (P5) of the sliced matrix, or of the per-qubit row when absent.

    Gray level 255 is frequency 1 and 0 is frequency 0.
    """
    grid = heat.sliced_mean if heat.sliced_mean is not None else heat.per_qubit_mean[None, :]
    pixels = np.rint(np.clip(grid, 0.0, 1.0) * 255).astype(np.uint8)
    rows, cols = pixels.shape
    return f"P5\n{cols} {rows}\n255\n".encode("ascii") + pixels.tobytes()


def save_heat_map_pgm(heat: HeatMap, path: PathLike) -> None:
    path = Path(path)
    try:
        path.write_bytes(heat_map_pgm(heat))
    except OSError as e:
        raise _io_error("write heat map image", path, e) from e


# ---------------------------------------------------------------- spectra


def spectrum_summary_dict(
    spectrum: SpectrumResult, fit: Optional[BulkFitReport] = None
) -> Dict[str, Any]:
    return spectrum.summary(fit).model_dump()


def save_spectrum(
    spectrum: SpectrumResult,
    csv_path: PathLike,
    summary_path: Optional[PathLike] = None,
    fit: Optional[BulkFitReport] = None,
) -> None:
    """Eigenvalue list as CSV (one ``eigenvalue,kind`` row each) plus an optional JSON summary."""
    csv_path = Path(csv_path)
    frame = pd.DataFrame(
        {
            "eigenvalue": np.concatenate([spectrum.bulk, spectrum.outliers]),
            "kind": ["bulk"] * spectrum.bulk.size + ["outlier"] * spectrum.outliers.size,
        }
    ).sort_values("eigenvalue", kind="stable")
    try:
        frame.to_csv(csv_path, index=False, float_format="%.17g")
        if summary_path is not None:
            Path(summary_path).write_bytes(
                orjson.dumps(
                    spectrum_summary_dict(spectrum, fit),
                    option=orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS,
                )
            )
    except OSError as e:
        raise _io_error("write spectrum", csv_path, e) from e
    logger.info("Spectrum written", path=str(csv_path), eigenvalues=len(frame))
