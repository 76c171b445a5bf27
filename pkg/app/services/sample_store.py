"""Parse, validate, generate and persist bit-string sample sets."""

import re
from pathlib import Path
from typing import Iterator, List, Optional, Tuple, Union

import numpy as np
import structlog

from app.core.config import settings
from app.core.exceptions import SampleBudgetError, SampleFormatError
from app.models.samples import DatasetDescriptor, SampleSet, SampleSource

logger = structlog.get_logger()

PathLike = Union[str, Path]

_KEY_PATTERN = re.compile(r"^(?:(?P<key>[nmse])(?P<number>\d+)|p(?P<pattern>[ABCD]+))$")
_ZERO = ord("0")
_TRAILING = " \t\r\n"


def parse_descriptor(filename: str) -> DatasetDescriptor:
    """Extract n, m, s, e and p from a hyphen-delimited dataset filename.

    Names that do not carry all five keys keep whatever keys they do carry
    and come back with ``warning`` set.
    """
    name = Path(filename).name
    stem = name.rsplit(".", 1)[0] if "." in name else name
    tokens = [t for t in stem.split("-") if t]

    fields: dict = {}
    extra: List[str] = []
    label: Optional[str] = None

    for position, token in enumerate(tokens):
        match = _KEY_PATTERN.match(token)
        if match is None:
            if position == 0:
                label = token
            else:
                extra.append(token)
            continue
        if match.group("pattern") is not None:
            if "pattern" in fields:
                extra.append(token)
            else:
                fields["pattern"] = match.group("pattern")
            continue
        target = {"n": "n_qubits", "m": "m_cycles", "s": "seed", "e": "elided_gates"}[
            match.group("key")
        ]
        if target in fields:
            extra.append(token)
            continue
        number = int(match.group("number"))
        if target in ("n_qubits", "m_cycles") and number < 1:
            extra.append(token)
            continue
        fields[target] = number

    descriptor = DatasetDescriptor(filename=name, label=label, extra=extra, **fields)
    if not descriptor.is_complete:
        descriptor = descriptor.model_copy(update={"warning": True})
        logger.warning(
            "Dataset filename does not follow the n-m-s-e-p convention",
            filename=name,
            recognised=sorted(fields),
        )
    return descriptor


def _decode_lines(
    raw_lines: List[Tuple[int, str]], path: Optional[str]
) -> np.ndarray:
    """Turn numbered text lines into a validated uint8 matrix."""
    width = len(raw_lines[0][1])
    for line_no, text in raw_lines:
        if len(text) != width:
            bad = next((c for c in text if c not in "01"), None)
            if bad is not None:
                raise SampleFormatError(
                    f"non-binary character {bad!r}", path=path, line=line_no
                )
            raise SampleFormatError(
                f"inconsistent line length {len(text)}, expected {width}",
                path=path,
                line=line_no,
            )

    joined = "".join(text for _, text in raw_lines).encode("latin-1")
    flat = np.frombuffer(joined, dtype=np.uint8) - np.uint8(_ZERO)
    invalid = flat > 1
    if invalid.any():
        first = int(np.argmax(invalid))
        line_no, text = raw_lines[first // width]
        raise SampleFormatError(
            f"non-binary character {text[first % width]!r}", path=path, line=line_no
        )
    return flat.reshape(len(raw_lines), width)


def _numbered_lines(text_lines: Iterator[str], start: int = 1) -> Iterator[Tuple[int, str]]:
    for offset, line in enumerate(text_lines):
        stripped = line.rstrip(_TRAILING)
        if stripped:
            yield start + offset, stripped


def parse_lines(
    lines: List[str],
    expected_n: Optional[int] = None,
    label: str = "",
    source: SampleSource = SampleSource.HARDWARE,
) -> SampleSet:
    """Build a SampleSet from in-memory bit-string lines."""
    numbered = list(_numbered_lines(iter(lines)))
    if not numbered:
        raise SampleFormatError("no records")
    bits = _decode_lines(numbered, None)
    if expected_n is not None and bits.shape[1] != expected_n:
        raise SampleFormatError(
            f"records hold {bits.shape[1]} bits, expected {expected_n}"
        )
    return SampleSet(bits=bits, label=label, source=source)


def parse_sample_file(
    path: PathLike,
    expected_n: Optional[int] = None,
    source: SampleSource = SampleSource.HARDWARE,
) -> SampleSet:
    """Read a text file holding one bit string per line.

    LF and CRLF endings are accepted and trailing whitespace is stripped.
    """
    path = Path(path)
    try:
        size = path.stat().st_size
        if size > settings.MAX_SAMPLE_BYTES:
            raise SampleBudgetError(
                f"{path}: {size} bytes exceeds the in-memory budget of "
                f"{settings.MAX_SAMPLE_BYTES} bytes; use iter_sample_blocks"
            )
        text = path.read_bytes().decode("latin-1")
    except OSError as e:
        logger.error("Failed to read sample file", path=str(path), error=str(e))
        raise OSError(f"{path}: {e.strerror or e}") from e

    numbered = list(_numbered_lines(iter(text.split("\n"))))
    if not numbered:
        raise SampleFormatError("no records", path=str(path))
    bits = _decode_lines(numbered, str(path))
    if expected_n is not None and bits.shape[1] != expected_n:
        raise SampleFormatError(
            f"records hold {bits.shape[1]} bits, expected {expected_n}", path=str(path)
        )

    descriptor = parse_descriptor(path.name)
    if descriptor.n_qubits is not None and descriptor.n_qubits != bits.shape[1]:
        logger.warning(
            "Filename qubit count disagrees with records",
            path=str(path),
            declared=descriptor.n_qubits,
            found=bits.shape[1],
        )
        descriptor = descriptor.model_copy(update={"n_qubits": None, "warning": True})

    sample = SampleSet(
        bits=bits,
        label=path.name,
        source=source,
        descriptor=descriptor,
    )
    logger.info("Sample file parsed", path=str(path), M=sample.M, n=sample.n)
    return sample


def iter_sample_blocks(
    path: PathLike,
    block_rows: Optional[int] = None,
    expected_n: Optional[int] = None,
) -> Iterator[SampleSet]:
    """Stream a sample file in row blocks, validating as parse_sample_file does."""
    path = Path(path)
    block_rows = block_rows or settings.STREAM_BLOCK_ROWS
    width = expected_n
    pending: List[Tuple[int, str]] = []
    emitted = 0

    try:
        with open(path, "rb") as handle:
            decoded = (raw.decode("latin-1") for raw in handle)
            for line_no, text in _numbered_lines(decoded):
                if width is None:
                    width = len(text)
                pending.append((line_no, text))
                if len(pending) >= block_rows:
                    bits = _decode_lines(pending, str(path))
                    if bits.shape[1] != width:
                        raise SampleFormatError(
                            f"records hold {bits.shape[1]} bits, expected {width}",
                            path=str(path),
                            line=pending[0][0],
                        )
                    yield SampleSet(bits=bits, label=path.name)
                    emitted += len(pending)
                    pending = []
    except OSError as e:
        logger.error("Failed to stream sample file", path=str(path), error=str(e))
        raise OSError(f"{path}: {e.strerror or e}") from e

    if pending:
        bits = _decode_lines(pending, str(path))
        if width is not None and bits.shape[1] != width:
            raise SampleFormatError(
                f"records hold {bits.shape[1]} bits, expected {width}",
                path=str(path),
                line=pending[0][0],
            )
        yield SampleSet(bits=bits, label=path.name)
        emitted += len(pending)

    if emitted == 0:
        raise SampleFormatError("no records", path=str(path))


def _check_budget(n: int, M: int) -> None:
    if n < 1 or M < 1:
        raise ValueError(f"n and M must be at least 1, got n={n}, M={M}")
    if n * M > settings.MAX_SAMPLE_BYTES:
        raise SampleBudgetError(
            f"{M}×{n} bits exceeds the in-memory budget of {settings.MAX_SAMPLE_BYTES} bytes"
        )


def _fair_bits(rng: np.random.Generator, M: int, n: int) -> np.ndarray:
    # One random byte yields eight fair bits.
    total = M * n
    packed = rng.integers(0, 256, size=(total + 7) // 8, dtype=np.uint8)
    return np.unpackbits(packed)[:total].reshape(M, n)


def generate_uniform(n: int, M: int, seed: int) -> SampleSet:
    """M i.i.d. fair n-bit strings from a seeded PCG64 generator."""
    _check_budget(n, M)
    rng = np.random.default_rng(seed)
    bits = _fair_bits(rng, M, n)
    return SampleSet(
        bits=bits,
        label=f"uniform-n{n}-M{M}-seed{seed}",
        source=SampleSource.UNIFORM_SYNTHETIC,
    )


def generate_spoof(
    n: int, M: int, seed: int, fixed_prefix_len: int, fixed_value: int
) -> SampleSet:
    """Fair bits with the first ``fixed_prefix_len`` columns pinned to ``fixed_value``."""
    if not 0 <= fixed_prefix_len <= n:
        raise ValueError(
            f"prefix length {fixed_prefix_len} out of range for {n}-bit strings"
        )
    if fixed_value not in (0, 1):
        raise ValueError(f"fixed value must be 0 or 1, got {fixed_value}")
    _check_budget(n, M)
    rng = np.random.default_rng(seed)
    bits = _fair_bits(rng, M, n)
    bits[:, :fixed_prefix_len] = fixed_value
    return SampleSet(
        bits=bits,
        label=f"spoof-n{n}-M{M}-seed{seed}-prefix{fixed_prefix_len}x{fixed_value}",
        source=SampleSource.SPOOF_SYNTHETIC,
    )


def write_sample_file(sample: SampleSet, path: PathLike) -> None:
    """Write one newline-terminated '0'/'1' line per record."""
    path = Path(path)
    M, n = sample.bits.shape
    lines = np.empty((M, n + 1), dtype=np.uint8)
    lines[:, :n] = sample.bits + np.uint8(_ZERO)
    lines[:, n] = ord("\n")
    try:
        with open(path, "wb") as handle:
            handle.write(lines.tobytes())
    except OSError as e:
        logger.error("Failed to write sample file", path=str(path), error=str(e))
        raise OSError(f"{path}: {e.strerror or e}") from e
    logger.info("Sample file written", path=str(path), M=M, n=n)
