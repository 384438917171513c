import numpy as np
import pytest

from multiplier_lab.analysis.constructions import BetaParams, w_beta
from multiplier_lab.models.field_models import SampleField, TorusGrid


@pytest.fixture
def grid_1d():
    return TorusGrid(d=1, n=256)


@pytest.fixture
def grid_2d():
    return TorusGrid(d=2, n=64)


@pytest.fixture
def constant_1d(grid_1d):
    return SampleField(grid=grid_1d, values=np.ones(grid_1d.shape))


@pytest.fixture
def w03_1d():
    """w_0.3 on a fine one-dimensional grid; its only zero is the origin."""
    return w_beta(BetaParams(beta=0.3), TorusGrid(d=1, n=4096))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
