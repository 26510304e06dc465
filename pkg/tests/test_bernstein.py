import json
import math
from fractions import Fraction

import numpy as np
import pytest

from mistkit import bernstein_approx as ba
from mistkit import gaussian_j as gj
from mistkit import kernels


def test_one_dimensional_examples():
    for n in (1, 3, 8):
        assert ba.bernstein_1d(lambda x: x, n) == ba.Poly1([0, 1])
        assert ba.bernstein_1d(lambda x: 1, n) == ba.Poly1([1])
        # B_n x^2 = x^2 + x(1-x)/n
        assert ba.bernstein_1d(lambda x: x * x, n) == ba.Poly1([0, Fraction(1, n), 1 - Fraction(1, n)])
    assert ba.bernstein_1d(lambda x: x * x, 2) == ba.Poly1([0, Fraction(1, 2), Fraction(1, 2)])
    with pytest.raises(ValueError):
        ba.bernstein_1d(lambda x: x, 0)


def test_one_dimensional_against_definition():
    f = lambda x: Fraction(1) / (1 + x * x)
    n = 6
    p = ba.bernstein_1d(f, n)
    for x in (Fraction(1, 7), Fraction(1, 2), Fraction(5, 6)):
        ref = sum(f(Fraction(k, n)) * math.comb(n, k) * x ** k * (1 - x) ** (n - k) for k in range(n + 1))
        assert p(x) == ref


def test_two_dimensional_examples():
    xy = ba.bernstein_2d(lambda x, y: x * y, 5)
    assert xy == ba.Poly2([[0, 0], [0, 1]])
    assert ba.bernstein_2d(lambda x, y: Fraction(3, 7), 4) == ba.Poly2([[Fraction(3, 7)]])
    p = ba.bernstein_2d(lambda x, y: x * x * y, 2)
    assert p == ba.Poly2([[0, 0], [0, Fraction(1, 2)], [0, Fraction(1, 2)]])


def test_shifted_expansion():
    p = ba.Poly2([[1, 2], [3, 4]])
    assert list(ba.shifted_expansion(ba.Poly2([[0, 0], [0, 1]]), 0, 0).flat) == [0, 0, 0, 1]
    sq = ba.shifted_expansion(ba.Poly2([[0], [0], [1]]), 1, 0)
    assert [sq[m, 0] for m in range(3)] == [1, 2, 1]
    rng = np.random.default_rng(0)
    mu = [[Fraction(int(rng.integers(-9, 10)), 4) for _ in range(5)] for _ in range(5)]
    p = ba.Poly2(mu)
    a, b = Fraction(3, 10), Fraction(3, 5)
    nu = ba.shifted_expansion(p, a, b)
    for _ in range(50):
        x, y = (Fraction(int(v), 16) for v in rng.integers(-16, 17, size=2))
        lhs = p(a + x, b + y)
        rhs = sum(nu[m, n] * x ** m * y ** n for m in range(nu.shape[0]) for n in range(nu.shape[1]))
        assert lhs == rhs


def test_poly2_derivative_and_json():
    p = ba.Poly2([[1, 2, 3], [4, 5, 6]])
    assert p.derivative(1, 0) == ba.Poly2([[4, 5, 6]])
    assert p.derivative(0, 2) == ba.Poly2([[6], [12]])
    assert p.total_degree == 3 and p.K == 2 and p.c == 6
    assert ba.Poly2.from_json(json.loads(json.dumps(p.to_json()))) == p


def test_basis_against_formula():
    u = np.array([0.0, 0.13, 0.5, 0.91, 1.0])
    for n in (1, 7, 40):
        B = kernels.bernstein_basis(n, u)
        ref = np.array([[math.comb(n, k) * x ** k * (1 - x) ** (n - k) for k in range(n + 1)] for x in u])
        assert np.allclose(B, ref, rtol=1e-12, atol=1e-300)


def test_eval_matches_exact_conversion():
    eps = 0.1
    net = ba.sample_net(0.5, eps, 6)
    poly = ba.net_to_poly2(net, eps)
    L = 1 - 2 * eps
    xs = np.array([0.15, 0.4, 0.77])
    vals = ba.bernstein_eval(net, (xs - eps) / L, (xs - eps) / L)
    for i, x in enumerate(xs):
        for j, y in enumerate(xs):
            assert float(poly(Fraction(x), Fraction(y))) == pytest.approx(vals[i, j], abs=1e-12)
    dx = ba.bernstein_eval(net, (xs - eps) / L, (xs - eps) / L, 1, 1, L)
    pxy = poly.derivative(1, 1)
    assert float(pxy(Fraction(0.4), Fraction(0.77))) == pytest.approx(dx[1, 2], rel=1e-10)


def test_log2_bound_dominates_exact():
    for n in (4, 8, 16):
        jt_net = ba.sample_net(-0.5, 0.1, n)
        c = ba.net_to_poly2(jt_net, 0.1).c
        assert math.log2(c) <= ba.log2_coeff_bound(jt_net, 0.1) + 1e-9


@pytest.fixture(scope="module")
def jt():
    return ba.approximate_j(0.5, 0.1, 0.05)


def test_approximation_meets_tolerance(jt):
    assert jt.error <= 0.05
    z = np.linspace(0.1, 0.9, 23)
    X, Y = np.meshgrid(z, z, indexing="ij")
    truth = gj.j_derivatives(0.5, X, Y)
    for key, (i, j) in ba.ORDERS.items():
        assert np.max(np.abs(jt.partial(z, z, i, j) - truth[key])) <= 0.05
    assert jt.K == 2 * jt.n


def test_rho_zero_is_exact():
    jt0 = ba.approximate_j(0.0, 0.1, 0.01)
    assert jt0.n == 16 and jt0.error < 1e-12


def test_values_and_cross_values(jt):
    rng = np.random.default_rng(1)
    x, y = rng.uniform(0.1, 0.9, 50), rng.uniform(0.1, 0.9, 50)
    v = jt.values(x, y)
    grid = jt(x, y)
    assert np.allclose(v, np.diag(grid), atol=1e-13)
    cv = jt.cross_values([x, y], [y, x, x])
    assert np.allclose(cv[0, 0], v, atol=1e-13)
    assert np.allclose(cv[1, 2], jt.values(y, x), atol=1e-13)


def test_json_roundtrip(jt):
    back = ba.JTilde.from_json(json.loads(json.dumps(jt.to_json())))
    assert back.n == jt.n and np.array_equal(back.net, jt.net)
    assert back.log2_coeff_bound() == jt.log2_coeff_bound()


def test_ladder_ratios():
    ladder = [{"n": 16, "error": 0.4}, {"n": 32, "error": 0.3}, {"n": 64, "error": 0.2}, {"n": 128, "error": 0.15}]
    assert ba.ladder_ratios(ladder) == [(64, 0.5), (128, 0.5)]


def test_bad_arguments():
    with pytest.raises(ValueError):
        ba.approximate_j(1.0, 0.1, 0.01)
    with pytest.raises(ValueError):
        ba.approximate_j(0.5, 0.6, 0.01)
    with pytest.raises(ba.ResourceError):
        ba.approximate_j(0.5, 0.1, 1e-9, cap=64)
