import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "ci",
    derandomize=True,
    max_examples=50,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("ci")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_map(rng, width, height):
    from semcom.image import SemanticMap

    return SemanticMap(rng.random((height, width)))


@pytest.fixture
def make_random_map():
    return random_map
