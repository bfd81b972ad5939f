import sys

import numpy as np
import pytest

from lightcone_shading.pauli import PauliSum, PauliTerm


def random_term(rng, n, coeff=None):
    x = int(rng.integers(1 << n))
    z = int(rng.integers(1 << n))
    c = complex(rng.standard_normal(), rng.standard_normal()) if coeff is None else coeff
    return PauliTerm(x, z, n, c)


def random_sum(rng, n, k, hermitian=False):
    terms = []
    for _ in range(k):
        c = float(rng.standard_normal()) if hermitian else None
        terms.append(random_term(rng, n, c))
    return PauliSum.from_terms(terms, n)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for k in sorted(mod.RESULTS):
            terminalreporter.write_line(mod.RESULTS[k])
