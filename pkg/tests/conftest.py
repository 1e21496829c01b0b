"""Shared fixtures for the plate_tone test suite."""

import pytest

from src.model.model_space import SpectralParams
from src.special.bessel import clear_caches


@pytest.fixture
def params2():
    """Planar model space, N = 2 (nu = 0)."""
    return SpectralParams.from_dimension(2.0)


@pytest.fixture
def params3():
    """Three-dimensional model space, N = 3 (nu = 1/2)."""
    return SpectralParams.from_dimension(3.0)


@pytest.fixture
def fresh_caches():
    """Run a test against empty zero and root caches."""
    clear_caches()
    yield
    clear_caches()
