import numpy as np
import pytest

from qtensor.potential import PotentialParams


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def params():
    return PotentialParams()


def random_sym(rng, n=None, scale=1.0):
    shape = (3, 3) if n is None else (n, 3, 3)
    a = rng.uniform(-scale, scale, size=shape)
    return 0.5 * (a + np.swapaxes(a, -1, -2))


def random_traceless(rng, n=None, scale=1.0):
    q = random_sym(rng, n, scale)
    tr = np.trace(q, axis1=-2, axis2=-1)
    return q - tr[..., None, None] * np.eye(3) / 3.0
