import numpy as np
import pytest
from hypothesis import settings

from lpresolvent.geometry import build_sphere_zonal, build_torus, cosine_damping

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@pytest.fixture(scope="session")
def torus8():
    return build_torus(3, 8)


@pytest.fixture(scope="session")
def torus16():
    return build_torus(3, 16)


@pytest.fixture(scope="session")
def sphere10():
    return build_sphere_zonal(10)


@pytest.fixture(scope="session")
def sphere24():
    return build_sphere_zonal(24)


@pytest.fixture(scope="session")
def variable_damping(torus16):
    return cosine_damping(torus16, 3.0, [((1, 0, 0), 1.0), ((0, 1, 0), 1.0), ((0, 0, 1), 1.0)])


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
