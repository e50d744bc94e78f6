import random
from fractions import Fraction

import pytest

from looplax.scalars import GaussianRational


def rand_gr(rng, span=3):
    return GaussianRational(
        Fraction(rng.randint(-span, span), rng.randint(1, 3)),
        Fraction(rng.randint(-span, span), rng.randint(1, 3)),
    )


def rand_mat(rng, n, span=3, traceless=False):
    m = [[rand_gr(rng, span) for _ in range(n)] for _ in range(n)]
    if traceless:
        m[n - 1][n - 1] = -sum((m[i][i] for i in range(n - 1)), GaussianRational(0))
    return tuple(tuple(row) for row in m)


def gr_eye(n):
    return tuple(
        tuple(GaussianRational(1 if i == j else 0) for j in range(n)) for i in range(n)
    )


@pytest.fixture
def rng():
    return random.Random(20240817)
