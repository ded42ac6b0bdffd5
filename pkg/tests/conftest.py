"""Shared fixtures: standard groupoids, twists, inclusions, and the
randomized twist corpus used by the property suites."""

import numpy as np
import pytest

from cartankit.groupoid import (
    cyclic_groupoid,
    disjoint_union,
    klein_four_groupoid,
    pair_groupoid,
)
from cartankit.inclusion import make_inclusion
from cartankit.matalg import generate_star_algebra
from cartankit.twist import (
    CocycleTwist,
    EquivariantFunction,
    coboundary_twist,
    trivial_twist,
)


def E(i, j, n):
    m = np.zeros((n, n), dtype=complex)
    m[i, j] = 1.0
    return m


def k4_nontrivial_sigma(K):
    """The standard nontrivial normalized cocycle on Z/2 x Z/2:
    sigma((a,b),(c,d)) = (-1)^(b c)."""
    def val(x, y):
        return (-1.0) ** (int(x[-1]) * int(y[-2])) + 0.0j
    return CocycleTwist(K, {p: val(*p) for p in K.compose_table})


def mndn_inclusion(n):
    units = [E(i, j, n) for i in range(n) for j in range(n)]
    C = generate_star_algebra(n, units)
    D = generate_star_algebra(n, [E(i, i, n) for i in range(n)])
    return make_inclusion(C, D, units)


def m2c_inclusion():
    """(M2 + C, C·1) with spanning unitary normalizers."""
    def bd(m2, lam):
        out = np.zeros((3, 3), dtype=complex)
        out[:2, :2] = m2
        out[2, 2] = lam
        return out

    gens = [
        bd(np.array([[0, 1], [1, 0]]), 1),
        bd(np.array([[1, 0], [0, -1]]), 1),
        bd(np.array([[0, -1j], [1j, 0]]), 1),
        bd(np.diag([1, 1j]), 1),
        bd(np.eye(2), -1),
    ]
    C = generate_star_algebra(3, gens)
    D = generate_star_algebra(3, [np.eye(3)])
    return make_inclusion(C, D, gens)


def random_coboundary(G, rng, k4_components=()):
    """A random normalized cocycle: a coboundary, optionally multiplied
    by the nontrivial K4 cocycle on designated components."""
    lam = {a: np.exp(2j * np.pi * rng.random()) for a in G.arrows}
    for e in G.unit_arrow.values():
        lam[e] = 1.0 + 0.0j
    T = coboundary_twist(G, lam)
    if k4_components:
        sigma = dict(T.sigma)
        for (a, b), v in T.sigma.items():
            for prefix in k4_components:
                if a.startswith(prefix) and b.startswith(prefix):
                    xa, xb = a[len(prefix):], b[len(prefix):]
                    sigma[(a, b)] = v * (-1.0) ** (int(xa[-1]) * int(xb[-2]))
        T = CocycleTwist(G, sigma)
    return T


def random_twist_corpus(count, seed=0):
    """Randomized twists over small groupoids (<= 24 arrows)."""
    rng = np.random.default_rng(seed)
    out = []
    builders = [
        lambda: (pair_groupoid(int(rng.integers(1, 5))), ()),
        lambda: (klein_four_groupoid(prefix="k"), ()),
        lambda: (cyclic_groupoid(int(rng.integers(2, 5))), ()),
        lambda: (disjoint_union(pair_groupoid(int(rng.integers(1, 4))),
                                klein_four_groupoid(prefix="k")), ("B.k",)),
        lambda: (disjoint_union(pair_groupoid(int(rng.integers(1, 4))),
                                cyclic_groupoid(int(rng.integers(2, 4)))),
                 ()),
    ]
    while len(out) < count:
        G, k4c = builders[int(rng.integers(len(builders)))]()
        if len(G.arrows) > 24:
            continue
        out.append(random_coboundary(G, rng, k4c))
    return out


def random_function(T, degree, rng):
    n = len(T.groupoid.arrows)
    vals = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return EquivariantFunction(T, degree, vals)


@pytest.fixture
def pair2():
    return pair_groupoid(2)


@pytest.fixture
def pair2_twist(pair2):
    return trivial_twist(pair2)


@pytest.fixture
def k4():
    return klein_four_groupoid()


@pytest.fixture
def k4_triv(k4):
    return trivial_twist(k4)


@pytest.fixture
def k4_ns(k4):
    return k4_nontrivial_sigma(k4)


@pytest.fixture
def m2d2():
    return mndn_inclusion(2)


@pytest.fixture
def m3d3():
    return mndn_inclusion(3)


@pytest.fixture
def m2c():
    return m2c_inclusion()
