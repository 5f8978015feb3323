import numpy as np
import pytest

from mesodrop.potential import HE4_HFDHE2
from mesodrop.smoothing import SmoothedPotential, calibrate_kappa


@pytest.fixture(scope="session")
def he4():
    return HE4_HFDHE2


@pytest.fixture(scope="session")
def kappa(he4):
    """Kernel width calibration, shared across the whole suite."""
    return calibrate_kappa(he4)


@pytest.fixture(scope="session")
def gaussian_well():
    """Model attractive smoothed potential: a smooth Gaussian well."""
    grid = np.geomspace(0.02, 45.0, 400)
    depth, width = 4.2e-22, 2.0
    values = -depth * np.exp(-grid**2 / (2.0 * width**2))
    return SmoothedPotential.tabulated(grid, values)
