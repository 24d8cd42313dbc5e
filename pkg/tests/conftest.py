from __future__ import annotations

import functools
import warnings

import numpy as np
import pytest

from dyonlab.fixedpoint import SolveOptions, solve_dyon
from dyonlab.grid import default_grid
from dyonlab.model import ModelParameters
from dyonlab.verify import bps_oracle


@functools.lru_cache(maxsize=None)
def solved(beta: float, bigC: float = 0.0, mode: str = "dyon", **opts):
    """Converged solution, shared by every test in the session."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return solve_dyon(ModelParameters(beta, bigC, 1.0, mode), SolveOptions(**opts))


@pytest.fixture(scope="session")
def grid25():
    return default_grid(1e-4, 25.0)


@pytest.fixture(scope="session")
def oracle0():
    return bps_oracle(0.0)


@pytest.fixture(scope="session")
def oracle06():
    return bps_oracle(0.6)


@pytest.fixture(scope="session")
def bps_profiles(grid25, oracle0):
    return oracle0.profiles(grid25)


@pytest.fixture(scope="session")
def monopole_beta1():
    return solved(1.0, 0.0, "monopole")


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(scope="session")
def solve():
    """Cached solver, ``solve(beta, C, mode="dyon", **options)``."""
    return solved


ACCEPTANCE_LINES: list = []


def report_criterion(number: int, passed: bool, detail: str) -> None:
    """Record and print one acceptance line."""
    line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


@pytest.fixture(scope="session")
def report():
    return report_criterion


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
