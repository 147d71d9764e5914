import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from strata.harness import Spectrum, generate_initial_data  # noqa: E402
from strata.spectral import Grid  # noqa: E402

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def small_initial():
    """Admissible random (v0, rho0) on a 16^3 grid."""
    return generate_initial_data(3, Spectrum(decay=4, cutoff=4), Grid.cube(16))


@pytest.fixture
def tiny_initial():
    return generate_initial_data(5, Spectrum(decay=4, cutoff=2), Grid.cube(8))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
