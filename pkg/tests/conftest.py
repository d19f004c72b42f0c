import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from forumsim import ModelParams, run_simulation

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def small_run():
    """A few thousand threads at default parameters."""
    return run_simulation(ModelParams(n_threads=3000, seed=11))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
