import numpy as np
import pytest

from thirring_ist.numerics import Grid
from thirring_ist.fields import PotentialField


@pytest.fixture(scope="session")
def grid512():
    return Grid.spatial(20.0, 512)


@pytest.fixture(scope="session")
def gauss512(grid512):
    return PotentialField.gaussian(grid512, 0.3)


@pytest.fixture(scope="session")
def zgrid512():
    return Grid.spectral(20.0, 512)


@pytest.fixture(scope="session")
def scat512(gauss512, zgrid512):
    from thirring_ist.direct import scattering_coefficients
    return scattering_coefficients(gauss512, zgrid512.nodes)


def rel_l2(grid, a, b):
    scale = max(float(np.sqrt(grid.h * np.sum(np.abs(b) ** 2))), 1e-300)
    return float(np.sqrt(grid.h * np.sum(np.abs(a - b) ** 2))) / scale
