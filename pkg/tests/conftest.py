import numpy as np
import pytest

from qdiff import LatticeConfig
from qdiff.sampler import SeedSpec, sample_band_matrix


@pytest.fixture
def small_1d():
    return LatticeConfig(d=1, n=5, w=2)


@pytest.fixture
def sample():
    def make(d, n, w, seed=0, replica=0):
        return sample_band_matrix(LatticeConfig(d=d, n=n, w=w), SeedSpec(seed, replica))

    return make


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_CRITERIA: dict = {}


@pytest.fixture
def criterion():
    """Record one acceptance verdict; the line is printed in the terminal summary."""

    def record(k: int, ok: bool, detail: str):
        line = f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        _CRITERIA[k] = line
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_CRITERIA):
        terminalreporter.write_line(_CRITERIA[k])
