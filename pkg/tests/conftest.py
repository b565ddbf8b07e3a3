import numpy as np
import pytest

from sonocaustics.field import SamplingPlane, TransducerArray, contribution_matrix


@pytest.fixture(scope="session")
def small_array():
    return TransducerArray.grid(nx=4, ny=4, pitch=0.01)


@pytest.fixture(scope="session")
def small_plane():
    return SamplingPlane.default(nx=16, ny=16)


@pytest.fixture(scope="session")
def small_contributions(small_array, small_plane):
    return contribution_matrix(small_array, small_plane)


@pytest.fixture
def rng():
    return np.random.default_rng(42)
