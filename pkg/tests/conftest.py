import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


def random_unit_quaternion(rng):
    z = rng.normal(size=4)
    return z / np.linalg.norm(z)


def random_unit_vector(rng):
    x = rng.normal(size=3)
    return x / np.linalg.norm(x)
