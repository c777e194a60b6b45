import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from unbounded_gibbs import Model, WeightFunction, build_measure, default_potential, exponents  # noqa: E402


@pytest.fixture(scope="session")
def measure():
    """u^6 law resolved for exp(lam u^4) up to lam = 2.5 (covers every test)."""
    return build_measure(default_potential(), p=4.0, max_lambda=2.5, tol=1e-12)


@pytest.fixture(scope="session")
def coarse_measure():
    """Smaller grid used for tensor work on 4 sites; still a valid single-spin law."""
    return build_measure(default_potential(), p=4.0, max_lambda=2.5, tol=1e-8)


@pytest.fixture(scope="session")
def model1(measure):
    return Model(measure, exponents(2.0), WeightFunction(1.0, 1))


@pytest.fixture(scope="session")
def model2(coarse_measure):
    return Model(coarse_measure, exponents(2.0), WeightFunction(1.0, 2))


@pytest.fixture(scope="session")
def model1_coarse(coarse_measure):
    return Model(coarse_measure, exponents(2.0), WeightFunction(1.0, 1))


_ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def record():
    """Store the one-line verdict of an acceptance criterion and echo it."""
    def _record(number: int, title: str, passed: bool, detail: str) -> bool:
        line = f"criterion {number:2d} {'PASS' if passed else 'FAIL'}  {title}: {detail}"
        _ACCEPTANCE_LINES[number] = line
        print(line)
        return passed
    return _record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(_ACCEPTANCE_LINES):
            terminalreporter.write_line(_ACCEPTANCE_LINES[k])
