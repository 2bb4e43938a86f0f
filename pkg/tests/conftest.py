import numpy as np
import pytest

from zvonkin.catalog import build_problem
from zvonkin.scale import build_transform


@pytest.fixture(scope="session")
def transforms():
    """Default-resolution transforms for every catalog entry, built once."""
    cache = {}

    def get(name, **params):
        key = (name, tuple(sorted(params.items())))
        if key not in cache:
            p = build_problem(name, **params)
            cache[key] = (p, build_transform(p))
        return cache[key]

    return get


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
