import numpy as np
import pytest

from ietflow import rauzy


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_irreducible(rng, m):
    while True:
        perm = tuple(int(x) + 1 for x in rng.permutation(m))
        if rauzy.is_irreducible(perm):
            return perm


def random_lengths(rng, m):
    lam = rng.dirichlet(np.ones(m))
    return np.clip(lam, 1e-6, None) / np.clip(lam, 1e-6, None).sum()


@pytest.fixture
def random_states():
    def gen(rng, count, m_max=6, m_min=2):
        out = []
        while len(out) < count:
            m = int(rng.integers(m_min, m_max + 1))
            perm = random_irreducible(rng, m)
            out.append((random_lengths(rng, m), perm))
        return out

    return gen
