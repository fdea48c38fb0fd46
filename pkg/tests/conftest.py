import numpy as np
import pytest

from qopt import OracleCounter, make_catalogue_objective


@pytest.fixture
def counter():
    return OracleCounter()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def quadratic():
    return make_catalogue_objective("quadratic")


@pytest.fixture
def quadratic_1d():
    return make_catalogue_objective("quadratic", {"dim": 1})


@pytest.fixture
def example1():
    return make_catalogue_objective("example1")


@pytest.fixture
def fig1():
    return make_catalogue_objective("fig1_counterexample")


@pytest.fixture
def glm():
    return make_catalogue_objective("glm_sigmoid")
