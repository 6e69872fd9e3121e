import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_spd(rng, k=None):
    """Well-conditioned SPD(3) matrices, independent of the package sampler."""
    shape = (3, 3) if k is None else (k, 3, 3)
    a = rng.standard_normal(shape)
    return a @ np.swapaxes(a, -1, -2) + 0.5 * np.eye(3)
