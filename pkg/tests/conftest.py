"""Shared fixtures.

The impairment model and the two long Poisson simulation runs are expensive,
so they are built once per session and shared between the unit tests and the
acceptance tests.
"""
import pytest

from snc80211.dcf import ImpairmentModel, Params80211, solve_fixed_point
from snc80211.sim import SimConfig, run


@pytest.fixture(scope="session")
def params():
    return Params80211()


@pytest.fixture(scope="session")
def fixed_point(params):
    return solve_fixed_point(params)


@pytest.fixture(scope="session")
def impairment(params):
    return ImpairmentModel(params)


def _tail_run(rate):
    return run(SimConfig(traffic="poisson", rate=rate, duration=50.0,
                         replications=100, sample_time=50.0, seed=7))


@pytest.fixture(scope="session")
def sim_tail_04():
    """100 replications of the low-load scenario, backlog sampled at 50 s."""
    return _tail_run(0.04)


@pytest.fixture(scope="session")
def sim_tail_07():
    """100 replications of the high-load scenario, backlog sampled at 50 s."""
    return _tail_run(0.07)
