import numpy as np
import pytest

from levywell import make_params


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def unit_params():
    return make_params(1.5)
