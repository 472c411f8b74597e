import numpy as np
import pytest

from seltorus.spectral import SpectralGrid


@pytest.fixture(scope="session")
def grid32():
    return SpectralGrid(32)


@pytest.fixture(scope="session")
def grid64():
    return SpectralGrid(64)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
