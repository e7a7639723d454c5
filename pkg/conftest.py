import numpy as np
import pytest

from lkengine import create_app
from lkengine.checks import random_metric_jet
from lkengine.geometry.metricfield import MetricJet


@pytest.fixture
def app():
    app = create_app("testing")
    yield app


@pytest.fixture
def runner(app):
    return app.test_cli_runner()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def metric_jets(rng):
    """Factory for random metric jets with the symmetries of real ones"""

    def make(n, count=20):
        return [random_metric_jet(rng, n) for _ in range(count)]

    return make


@pytest.fixture
def relabel():
    """The same metric jet with its coordinates permuted"""

    def permute(mj, perm):
        perm = np.asarray(perm)
        return MetricJet(mj.g[np.ix_(perm, perm)], mj.dg[np.ix_(perm, perm, perm)],
                         mj.ddg[np.ix_(perm, perm, perm, perm)])

    return permute


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: four-dimensional quadratures that take tens of seconds")
