import numpy as np
import pytest

from sciss.ising import IsingParams
from sciss.simulate import THETA_MAIN


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def theta_main():
    return THETA_MAIN


def random_ising(rng, q, d=0, scale=1.0):
    node = rng.uniform(-scale, scale, size=(q, d + 1))
    pair = rng.uniform(-scale, scale, size=(q, q))
    pair = 0.5 * (pair + pair.T)
    np.fill_diagonal(pair, 0.0)
    return IsingParams(node, pair)
