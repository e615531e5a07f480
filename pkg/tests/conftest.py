import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from hdual import _backend

settings.register_profile(
    "default", max_examples=100, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.register_profile("ci", max_examples=300, deadline=None, derandomize=True,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(params=sorted(_backend.BACKENDS))
def kernels(request):
    """Each available kernel backend in turn."""
    return _backend.BACKENDS[request.param]


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_H(rng: np.random.Generator, n: int) -> np.ndarray:
    """Entries uniform in [-1, 1], diagonal shifted by +1."""
    a = np.tril(rng.uniform(-1.0, 1.0, size=(n, n)))
    return a + np.eye(n)


def random_weights(rng: np.random.Generator, n: int) -> np.ndarray:
    """Positive, strictly increasing u_0..u_N."""
    return np.cumsum(rng.uniform(0.1, 2.0, size=n + 1))
