import numpy as np
import pytest
from hypothesis import HealthCheck, settings

import phenopart as pp

settings.register_profile(
    "deterministic",
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("deterministic")


@pytest.fixture(scope="session")
def advsel_profile():
    return pp.build_profile("one-minus-x")


@pytest.fixture(scope="session")
def advsel_model(advsel_profile):
    # a = x(1-x), R = 6 - 4x - I, both rest points inside the support
    return pp.build_model("advsel1d", advsel_profile.support)


def make_ensemble(n, seed=0, dim=1, h=None):
    """Random but reproducible particle cloud on the unit box."""
    rng = np.random.default_rng(seed)
    positions = rng.uniform(0.0, 1.0, size=(n, dim))
    volumes = np.full(n, 1.0 / n) * rng.uniform(0.5, 1.5, size=n)
    intensities = rng.uniform(0.1, 3.0, size=n)
    return pp.ParticleEnsemble(
        time=0.0, positions=positions, volumes=volumes,
        intensities=intensities, h=h if h is not None else 1.0 / n,
        index_set=np.arange(n))


@pytest.fixture
def random_ensemble():
    return make_ensemble(40, seed=7)
