"""
Shared fixtures and the --runslow switch for the test suite.
"""

import numpy as np
import pytest

from kpp.model import Grid, ModelSpec, TWProfile, momentum_identity
from kpp.twsolver import solve_tw


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run tests marked slow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


def tanh_front(lam=1.0, width=2.0, left=-40.0, right=40.0, h=0.01, shift=0.0, residual=1e-8):
    """Profile (1 - tanh((y - shift)/width))/2; its momentum is lam/(3 width)."""
    grid = Grid.from_spacing(left, right, h)
    values = 0.5 * (1.0 - np.tanh((grid.nodes - shift) / width))
    raw = TWProfile(grid, values, lam, 2, residual, 0.0)
    return TWProfile(grid, values, lam, 2, residual, momentum_identity(raw))


@pytest.fixture
def make_front():
    return tanh_front


@pytest.fixture(scope="session")
def m2_outcome():
    """Converged m=2, lambda=0.5 wave on the default grid."""
    return solve_tw(ModelSpec(2, 0.5))


@pytest.fixture(scope="session")
def m1_outcome():
    return solve_tw(ModelSpec(1, 2.0))
