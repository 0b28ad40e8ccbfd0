import pytest
from hypothesis import HealthCheck, settings

from platelab.spectral import SpectralBasis

settings.register_profile("platelab", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("platelab")


@pytest.fixture(scope="session")
def basis():
    """The default disc basis; assembly takes a few seconds, so it is shared."""
    return SpectralBasis()


@pytest.fixture(scope="session")
def small_basis():
    return SpectralBasis(M=4, K=12, n_r=64, n_theta=64)
