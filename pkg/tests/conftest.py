import numpy as np
import pytest

from bunchlab.distinguishability import optimal_directions
from bunchlab.interferometry import drury_setup


@pytest.fixture(scope="session")
def drury():
    setup, alpha = drury_setup(0)
    return setup, alpha


@pytest.fixture(scope="session")
def drury_dirs(drury):
    return optimal_directions(drury[0].H)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def random_unit_vectors(rng, n, d):
    v = rng.standard_normal((n, d)) + 1j * rng.standard_normal((n, d))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


_CRITERIA: list[str] = []


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line for an acceptance criterion; echoed in the summary."""

    def record(label: str, passed: bool, detail: str) -> bool:
        line = f"{'PASS' if passed else 'FAIL'}  {label}: {detail}"
        _CRITERIA.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in _CRITERIA:
            terminalreporter.write_line(line)
