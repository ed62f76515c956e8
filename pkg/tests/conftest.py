import numpy as np
import pytest

from gaborheat.grid import Grid, GridFunction, gaussian


@pytest.fixture(scope="session")
def grid1d():
    """Desk-scale default grid: d=1, L=40, n=512."""
    return Grid(d=1, L=40.0, n=512)


@pytest.fixture(scope="session")
def coarse_grid():
    """Cheap grid for dense-operator tests."""
    return Grid(d=1, L=40.0, n=128)


@pytest.fixture()
def rng():
    return np.random.default_rng(20230817)


@pytest.fixture()
def random_function(grid1d, rng):
    """Random smooth numerically-supported function."""
    x = grid1d.x_mesh()[..., 0]
    vals = (rng.standard_normal(grid1d.shape) + 1j * rng.standard_normal(grid1d.shape))
    envelope = np.exp(-(x**2) / 18.0)
    return GridFunction(grid1d, vals * envelope)


@pytest.fixture(scope="session")
def unit_gaussian(grid1d):
    return gaussian(grid1d)
