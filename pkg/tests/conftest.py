"""Shared fixtures: the benchmark problems are solved once per session and
reused by the module tests and the acceptance suite."""

import numpy as np
import pytest

from borelsum import desk
from borelsum.solver import SolveConfig, solve


def borel_closed_form(p, t):
    """Borel transform of the linear benchmark solution: (1 - e^{-p^3 t})/p^2,
    computed with expm1 for small-argument accuracy."""
    p = np.asarray(p, dtype=complex)
    return -np.expm1(-p ** 3 * t) / p ** 2


@pytest.fixture(scope="session")
def linear_solution():
    problem = desk.linear_problem()
    config = SolveConfig()
    F, report = solve(problem, config)
    return problem, config, F, report


@pytest.fixture(scope="session")
def weak_solution():
    problem = desk.weakly_nonlinear_problem()
    config = SolveConfig()
    F, report = solve(problem, config)
    return problem, config, F, report


@pytest.fixture(scope="session")
def harry_scaled():
    from borelsum.harrydym import FAST_SCALED_CONFIG, harry_dym_scaled
    return harry_dym_scaled(3, 0.1, config=FAST_SCALED_CONFIG)
