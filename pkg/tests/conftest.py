import numpy as np
import pytest

from src.algorithm.geometry.models import Circle, FlatTorus, Sphere
from src.utils.load_config import Config


@pytest.fixture(autouse=True)
def fresh_config():
    """Config is a singleton; every test starts from the defaults."""
    Config.reset()
    yield
    Config.reset()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240601)


@pytest.fixture
def circle() -> Circle:
    return Circle()


@pytest.fixture
def sphere() -> Sphere:
    return Sphere(2)


@pytest.fixture
def torus() -> FlatTorus:
    return FlatTorus(2)


@pytest.fixture(params=["circle", "sphere", "torus"])
def manifold(request):
    return {"circle": Circle(), "sphere": Sphere(2), "torus": FlatTorus(2)}[request.param]
