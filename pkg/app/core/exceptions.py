"""Domain exceptions raised by the verification services."""

from typing import Optional


class VerificationError(Exception):
    """Base class for every error the verification pipeline reports."""


class SampleFormatError(VerificationError, ValueError):
    """A sample file or payload does not hold a valid bit-string matrix."""

    def __init__(
        self, message: str, path: Optional[str] = None, line: Optional[int] = None
    ) -> None:
        self.path = path
        self.line = line
        location = ""
        if path is not None:
            location = f"{path}"
            if line is not None:
                location += f":{line}"
            location += ": "
        elif line is not None:
            location = f"line {line}: "
        super().__init__(f"{location}{message}")


class SampleBudgetError(VerificationError, MemoryError):
    """A sample would exceed the configured in-memory budget."""


class DimensionMismatchError(VerificationError, ValueError):
    """Two operands disagree on qubit count or matrix shape."""


class InsufficientDataError(VerificationError, ValueError):
    """Not enough records or bits for the requested statistic."""


class SimulatorLimitError(VerificationError, MemoryError):
    """A circuit or matrix exceeds the dense simulation cap."""


class TopologyError(VerificationError, ValueError):
    """A coupler pattern cannot be realised on the chosen topology."""


class NonUnitaryError(VerificationError, ValueError):
    """A gate or matrix that must be unitary is not."""


class DegenerateSpectrumError(VerificationError, ValueError):
    """The bulk spectrum carries no spread to fit."""


class ConfigurationError(VerificationError, ValueError):
    """A run configuration violates its schema."""


class PathAccessError(VerificationError, ValueError):
    """A requested path lies outside the readable data root."""
