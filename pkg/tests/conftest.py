"""Shared fixtures: small grids and pre-integrated flows reused across tests."""

import numpy as np
import pytest

from disclab.fields import radial_bump
from disclab.flows import flow_map
from disclab.grids import square_grid


AMP, RHO, M = 0.05, 0.8, 4


@pytest.fixture(scope="session")
def bump():
    return radial_bump(amp=AMP, rho=RHO, m=M)


@pytest.fixture(scope="session")
def grid65():
    return square_grid(65)


@pytest.fixture(scope="session")
def grid129():
    return square_grid(129)


@pytest.fixture(scope="session")
def grid257():
    return square_grid(257)


@pytest.fixture(scope="session")
def bump_map_257(bump, grid257):
    """Time-1 map of the standard bump on the 257-node grid."""
    return flow_map(bump, 1.0, grid=grid257, dt=1e-3)


@pytest.fixture(scope="session")
def bump_map_129(bump, grid129):
    return flow_map(bump, 1.0, grid=grid129, dt=1e-3)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(12345)
