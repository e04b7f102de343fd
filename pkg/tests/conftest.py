import numpy as np
import pytest

from sparse_meter.data import synthesize_dataset, split, normalize


def pytest_addoption(parser):
    parser.addoption(
        '--runslow', action='store_true', default=False,
        help='run the slow trend tests on synthetic data'
    )


def pytest_configure(config):
    config.addinivalue_line('markers', 'slow: long-running trend test')


def pytest_collection_modifyitems(config, items):
    if config.getoption('--runslow'):
        return
    skip = pytest.mark.skip(reason='needs --runslow')
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip)


@pytest.fixture(scope='session')
def small_dataset():
    """Split and standardized synthetic data with 60 days."""
    dataset, _ = normalize(split(synthesize_dataset(60, seed=3), seed=3))
    return dataset


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
