import numpy as np
import pytest

from polyqd import geometry as geo


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def regular(r=0.5, theta=0.0):
    return np.r_[np.full(8, r), np.full(8, theta)]


@pytest.fixture
def random_genomes(rng):
    def make(n, case="E"):
        b = geo.get_bounds(case)
        return rng.uniform(b.lower, b.upper, size=(n, geo.N_GENES))
    return make
