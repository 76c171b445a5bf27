"""Shared fixtures for the RCS Verify test suite."""

from pathlib import Path

import numpy as np
import pytest

from app.models.samples import SampleSet
from app.services import sample_store


@pytest.fixture
def small_bits() -> np.ndarray:
    return np.array([[0, 1, 0], [1, 1, 1]], dtype=np.uint8)


@pytest.fixture
def small_sample(small_bits: np.ndarray) -> SampleSet:
    return SampleSet(bits=small_bits, label="small")


@pytest.fixture
def sample_file(tmp_path: Path) -> Path:
    path = tmp_path / "measurement-n3-m20-s0-e0-pABCDCDAB.txt"
    path.write_text("010\n111\n")
    return path


@pytest.fixture
def uniform_file(tmp_path: Path) -> Path:
    """4000 fair 16-bit records on disk."""
    path = tmp_path / "uniform-n16.txt"
    sample_store.write_sample_file(sample_store.generate_uniform(16, 4000, seed=11), path)
    return path


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)
