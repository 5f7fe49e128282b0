import logging
import numpy as np
import pytest

from sublaplace.data.dataset import Dataset
from sublaplace.laplace.system import Likelihood, build_system
from sublaplace.net.model import init_model
from sublaplace.utils.logger import JsonMessageFormatter


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow acceptance experiments")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(autouse=True)
def drop_json_handlers():
    """Entry points install JSON handlers on the root logger; remove them after each test"""
    yield
    root = logging.getLogger()
    for handler in list(root.handlers):
        if isinstance(handler.formatter, JsonMessageFormatter):
            handler.close()
            root.removeHandler(handler)


@pytest.fixture
def small_model():
    # p = (3*6 + 6) + (6*5 + 5) + (5 + 1) = 65
    return init_model(3, (6, 5), seed=1)


@pytest.fixture
def small_data():
    rng = np.random.default_rng(2)
    X = rng.standard_normal((20, 3))
    y = np.sin(X[:, 0]) + 0.1 * rng.standard_normal(20)
    return Dataset(X, y)


@pytest.fixture
def small_system(small_model, small_data):
    return build_system(small_model, small_data, Likelihood.REGRESSION, noise_var=0.25)
