import numpy as np
import pytest

from biphoton import Field, make_grid


@pytest.fixture
def rng():
    return np.random.default_rng(987654321)


def random_field(grid, rng):
    v = rng.standard_normal(grid.n) + 1j * rng.standard_normal(grid.n)
    return Field(grid, v)


@pytest.fixture
def grid16():
    return make_grid(256, 16.0)


@pytest.fixture
def small_grid():
    return make_grid(64, 16.0)
