import cmath
import math

import numpy as np
import pytest


def kernel_oracle(z, t, eps, n):
    """Independent scalar evaluation of the regularized kernel with cmath."""
    if t <= 0:
        return 0j
    r2 = math.fsum(c * c for c in z)
    pref = (eps + 1j) * cmath.exp(-0.5 * n * cmath.log(4 * math.pi * (eps + 1j) * t))
    return pref * cmath.exp(-(eps + 1j) * r2 / (4 * (eps * eps + 1) * t))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
