import functools

import pytest

from cranetraj.config import DEFAULT_SOLVER
from cranetraj.nlp import SolverOptions
from cranetraj.transcription import bundled_spec, solve_ocp

CRITERIA = {}


@functools.lru_cache(maxsize=None)
def bundled_solution(alpha, k=50):
    """Solve the bundled scenario once per session; returns ``(spec, sol, outcome)``."""
    spec = bundled_spec(alpha=alpha, k=k)
    sol, outcome = solve_ocp(spec, options=SolverOptions(**DEFAULT_SOLVER))
    return spec, sol, outcome


@pytest.fixture(scope="session")
def solved():
    return bundled_solution


def record(number, passed, detail):
    line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
    CRITERIA[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(CRITERIA):
        terminalreporter.write_line(CRITERIA[number])
