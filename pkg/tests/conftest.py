import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240501)


def random_design(rng, n, p, scale=None):
    X = rng.standard_normal((n, p))
    if scale is not None:
        X = X * scale
    return X
