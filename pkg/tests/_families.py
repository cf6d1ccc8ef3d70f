"""Random integer commuting nilpotent families, built block by block."""

import random
from fractions import Fraction

import numpy as np

from nilflow import numlin


def jordan(m):
    J = numlin.zeros((m, m))
    for i in range(m - 1):
        J[i, i + 1] = Fraction(1)
    return J


def unimodular(r, rng, steps=6):
    """Random integer matrix of determinant 1 and its exact inverse."""
    g = numlin.eye(r)
    for _ in range(steps):
        i, j = rng.sample(range(r), 2)
        c = rng.choice([-1, 1, 2])
        E = numlin.eye(r)
        E[i, j] = Fraction(c)
        g = g @ E
    return g, numlin.inv(g)


def random_family(rng, r_max=6, k_max=3, scramble=True):
    """``k`` commuting nilpotents: on each diagonal block every ``N_i`` is ``a J + b J^2``."""
    r = rng.randint(2, r_max)
    k = rng.randint(1, k_max)
    sizes = []
    left = r
    while left:
        m = rng.randint(1, left)
        sizes.append(m)
        left -= m
    Ns = [numlin.zeros((r, r)) for _ in range(k)]
    start = 0
    for m in sizes:
        J = jordan(m)
        J2 = J @ J
        for N in Ns:
            a = rng.choice([0, 0, 1, 1, 2, -1])
            b = rng.choice([0, 0, 0, 1]) if m > 2 else 0
            N[start : start + m, start : start + m] = J * a + J2 * b
        start += m
    if all(numlin._all_zero(N) for N in Ns):
        Ns[0][0:2, 0:2] = jordan(2) if sizes[0] >= 2 else Ns[0][0:2, 0:2]
    if scramble:
        g, gi = unimodular(r, rng)
        Ns = [gi @ N @ g for N in Ns]
    return Ns


def families(count, seed=0, **kw):
    rng = random.Random(seed)
    out = []
    while len(out) < count:
        Ns = random_family(rng, **kw)
        if any(not numlin._all_zero(N) for N in Ns):
            out.append(Ns)
    return out


def E(r, i, j):
    M = numlin.zeros((r, r))
    M[i - 1, j - 1] = Fraction(1)
    return M


def rational_array(rows):
    return numlin.rational(np.array(rows))
