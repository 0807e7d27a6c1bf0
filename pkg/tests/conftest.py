import numpy as np
import pytest

from tflab.gabor import GaborSystem
from tflab.lattices import build_lattice
from tflab.signals import gaussian_window


@pytest.fixture(scope="session")
def grid():
    return {"d": 1, "L": 16.0, "N": 256}


@pytest.fixture(scope="session")
def gauss(grid):
    return gaussian_window(grid["d"], grid["L"], grid["N"])


@pytest.fixture(scope="session")
def lattice_half():
    """alpha = beta = 1/2, truncation radius 5 (441 points)."""
    return build_lattice(0.5, 0.5, 1, 5.0)


@pytest.fixture(scope="session")
def system(gauss, lattice_half):
    return GaborSystem(gauss, lattice_half)


@pytest.fixture()
def rng():
    return np.random.default_rng(0)
