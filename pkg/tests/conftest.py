import pytest
from hypothesis import HealthCheck, settings

from branchscope import catalogue, solve_malthus

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def models():
    return catalogue()


@pytest.fixture(scope="session")
def profiles(models):
    return {name: solve_malthus(m) for name, m in models.items()}
