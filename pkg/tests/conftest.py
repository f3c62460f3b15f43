import numpy as np
import pytest

from hypdeconv.distributions import gaussian_radial_density


@pytest.fixture(scope="session")
def gauss_01():
    return gaussian_radial_density(0.1)


@pytest.fixture(scope="session")
def gauss_005():
    return gaussian_radial_density(0.05)


@pytest.fixture(scope="session")
def gauss_015():
    return gaussian_radial_density(0.15)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)
