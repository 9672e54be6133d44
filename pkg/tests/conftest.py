from __future__ import annotations

import pytest
from hypothesis import HealthCheck, settings

from skewlab import FiberPolynomial, SkewMap, builtin_map

settings.register_profile("skewlab", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("skewlab")


@pytest.fixture(scope="session")
def example():
    """f(t, z) = (t/2, z^2 - 2 + t/10) on |t| <= 1."""
    return builtin_map("example")


@pytest.fixture(scope="session")
def cheb():
    return FiberPolynomial([-2, 0, 1])


@pytest.fixture(scope="session")
def square():
    return FiberPolynomial([0, 0, 1])


@pytest.fixture(scope="session")
def product():
    return SkewMap.from_poly(0.5, [-2, 0, 1], {})
