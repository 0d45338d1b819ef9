import numpy as np
import pytest

from bdspde import CoefficientSet, build_grid

EXTINCTION = dict(a1=2.0, b1=1.0, c1=1.0, a2=1.0, b2=1.0, c2=1.0, m1=1.0, m2=2.0, m3=1.0)
PERMANENCE = dict(a1=4.0, b1=1.0, c1=1.0, a2=0.1, b2=1.0, c2=4.0, m1=1.0, m2=1.0, m3=1.0)


@pytest.fixture
def grid64():
    return build_grid(64)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def constant_coeffs(M=64, d1=0.1, d2=0.1, **overrides):
    values = dict(PERMANENCE)
    values.update(overrides)
    return CoefficientSet.constant(M, d1=d1, d2=d2, **values)
