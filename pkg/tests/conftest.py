import numpy as np
import pytest

from attflock.acceptance import RunCache


@pytest.fixture(scope="session")
def cache():
    """Shared scenario-run cache; compiles the kernel once."""
    c = RunCache()
    c.warmup()
    return c


@pytest.fixture(scope="session")
def trace_a(cache):
    return cache.trace("A_full")


@pytest.fixture(scope="session")
def trace_a_att(cache):
    return cache.trace("A_att")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
