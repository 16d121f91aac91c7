import os

import hypothesis
import numpy as np
import pytest

from latticeforge.lattice import LatticeBasis2, LatticeBasis3

hypothesis.settings.register_profile("default", max_examples=25, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=5, deadline=None)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def random_basis(rng, dim, spread=0.3):
    """A well-conditioned random basis near the identity."""
    while True:
        b = np.eye(dim) + spread * rng.standard_normal((dim, dim))
        if abs(np.linalg.det(b)) > 0.3:
            cls = LatticeBasis2 if dim == 2 else LatticeBasis3
            return cls(b)


def random_unimodular(rng, dim, steps=4):
    u = np.eye(dim, dtype=int)
    for _ in range(steps):
        i, j = rng.choice(dim, 2, replace=False)
        e = np.eye(dim, dtype=int)
        e[i, j] = rng.integers(-2, 3)
        u = u @ e
    return u


def rotation(rng, dim):
    q, r = np.linalg.qr(rng.standard_normal((dim, dim)))
    return q * np.sign(np.diag(r))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
