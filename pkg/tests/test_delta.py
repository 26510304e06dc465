from fractions import Fraction
from itertools import combinations, product

import pytest

from mistkit import cube_fourier as cf
from mistkit import delta_functionals as dl
from oracles import delta_direct, fourier


def test_examples():
    assert dl.delta_recursive(cf.dictator(1)) == Fraction(1, 8)
    assert dl.delta_fourier(cf.dictator(1)) == Fraction(1, 8)
    assert dl.delta_recursive(cf.constant(5, Fraction(1, 3))) == 0
    chi = cf.parity(2, {1, 2})
    assert dl.delta_recursive(chi) == 1
    assert dl.delta_fourier(chi) == 1


@pytest.mark.parametrize("n", range(1, 7))
def test_three_ways_agree(n):
    for seed in range(6):
        f = cf.random_dyadic(n, 5, 100 * n + seed, signed=seed % 2 == 1)
        ref = delta_direct(f.values, n)
        assert dl.delta_recursive(f) == ref
        assert dl.delta_fourier(f) == ref


def test_restricted_level1_against_direct():
    f = cf.random_dyadic(4, 4, 3)
    chains = dl.restricted_level1(f.fourier)
    for i in range(1, 5):
        for k, c in enumerate(chains[i - 1]):
            # the restriction fixes x_{i+1..n}; average f * x_i over x_1..x_i
            acc = Fraction(0)
            for lo in range(1 << i):
                xi = -1 if lo >> (i - 1) & 1 else 1
                acc += f.values[(k << i) | lo] * xi
            assert c == acc / (1 << i)


def test_flip_bound():
    assert dl.flip_bound(cf.constant(3, Fraction(1, 2))) == 0
    assert dl.flip_bound(cf.dictator(1)) == 1
    f = cf.random_dyadic(6, 6, 4)
    assert dl.delta_fourier(f) < dl.flip_bound(f)


def test_restriction_coefficient():
    f = cf.random_dyadic(4, 4, 1, signed=True)
    assert dl.restriction_coefficient(f, [], [], [1, 3]) == f.fourier[{1, 3}]
    chi = cf.parity(2, {1, 2})
    assert dl.restriction_coefficient(chi, [2], [-1], [1]) == -1
    rest = [1, 2, 3, 4]
    for r in range(4):
        for S in combinations(rest, r):
            others = [j for j in rest if j not in S]
            for x in product((1, -1), repeat=len(S)):
                for q in range(len(others) + 1):
                    for U in combinations(others, q):
                        g = cf.restrict(f, S, x)
                        free = others
                        mask = sum(1 << free.index(j) for j in U)
                        assert dl.restriction_coefficient(f, S, x, U) == fourier(g.values, g.n)[mask]
    with pytest.raises(ValueError):
        dl.restriction_coefficient(f, [1], [1], [1])


def test_squared_restriction_stats():
    f = cf.random_dyadic(4, 3, 9)
    second, ok = dl.squared_restriction_stats(f, [2], [3, 4])
    assert ok
    assert second <= cf.influence(f.fourier, 2)


def test_variance_identity():
    assert dl.variance_identity(cf.constant(3, Fraction(2, 5)))
    assert sum(dl.chain_second_moments(cf.dictator(3))) == Fraction(1, 4)
    for seed in range(5):
        assert dl.variance_identity(cf.random_dyadic(6, 5, seed))


def test_noise_restriction_commute():
    f = cf.random_dyadic(4, 4, 2)
    for sigma in (1, 0, Fraction(1, 2)):
        for r in range(4):
            for S in combinations([1, 2, 3, 4], r):
                others = [j for j in (1, 2, 3, 4) if j not in S]
                for q in range(len(others) + 1):
                    for U in combinations(others, q):
                        assert dl.noise_restriction_commute(f, sigma, S, U)


def test_hyper_bound():
    lhs, rhs, ok = dl.delta_hyper_bound(cf.constant(4, Fraction(1, 2)), Fraction(9, 10))
    assert lhs == 0 and ok
    lhs, rhs, ok = dl.delta_hyper_bound(cf.dictator(2), Fraction(9, 10))
    assert lhs == (Fraction(9, 10) / 2) ** 3 and ok
    for seed in range(20):
        for sigma in (Fraction(3, 4), Fraction(9, 10)):
            assert dl.delta_hyper_bound(cf.random_dyadic(8, 4, seed, signed=True), sigma)[2]
    with pytest.raises(ValueError):
        dl.delta_hyper_bound(cf.dictator(2), Fraction(1, 2))


def test_report():
    rep = dl.delta_report(cf.majority(5), Fraction(9, 10))
    assert rep.delta_recursive == rep.delta_fourier
    d = rep.to_json()
    assert Fraction(d["delta_fourier"]) == rep.delta_fourier and d["hyper_bound"] > 0
