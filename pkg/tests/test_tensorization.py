import math
from fractions import Fraction

import numpy as np
import pytest

from mistkit import cube_fourier as cf
from mistkit import tensorization as tz
from oracles import plackett_j


def test_renyi_examples():
    prod = tz.CorrelatedMeasure(((Fraction(1, 6), Fraction(1, 3)), (Fraction(1, 6), Fraction(1, 3))))
    assert tz.renyi_correlation(prod) == pytest.approx(0.0, abs=1e-12)
    for rho in (Fraction(1, 3), Fraction(-1, 2)):
        assert tz.renyi_correlation(tz.binary_measure(rho)) == pytest.approx(abs(float(rho)), abs=1e-12)
    mu = tz.resample_measure([Fraction(1, 2), Fraction(1, 3), Fraction(1, 6)], Fraction(2, 5))
    assert tz.renyi_correlation(mu) == pytest.approx(0.4, abs=1e-12)


def test_renyi_against_numpy_svd():
    W = np.random.default_rng(3).integers(1, 50, size=(4, 3))
    tot = int(W.sum())
    mu = tz.CorrelatedMeasure(tuple(tuple(Fraction(int(v), tot) for v in row) for row in W))
    P = W / tot
    Q = P / np.sqrt(np.outer(P.sum(1), P.sum(0)))
    assert tz.renyi_correlation(mu) == pytest.approx(np.linalg.svd(Q, compute_uv=False)[1], abs=1e-12)


def test_measure_validation():
    with pytest.raises(ValueError):
        tz.CorrelatedMeasure(((Fraction(1, 2), Fraction(1, 4)), (0, 0)))
    with pytest.raises(ValueError):
        tz.CorrelatedMeasure(((Fraction(3, 2), Fraction(-1, 2)),))


def test_base_case_constant():
    assert tz.base_case_constant(0.0, 0.1) == 0.0
    c1, c2 = tz.base_case_constant(0.5, 0.1), tz.base_case_constant(0.5, 0.2)
    assert 0 < c2 <= c1 and math.isfinite(c1)


def test_base_case_examples():
    rep = tz.check_base_case([(0.3, 0.6, 1.0)], 0.5, eps=0.1)
    assert rep.ok and rep.error_term == 0 and rep.lhs == pytest.approx(rep.rhs_main, abs=1e-15)
    # X, Y uniform on {a, b} with correlation rho/2
    a, b, c = 0.2, 0.8, 0.25
    atoms = [(a, a, (1 + c) / 4), (b, b, (1 + c) / 4), (a, b, (1 - c) / 4), (b, a, (1 - c) / 4)]
    rep = tz.check_base_case(atoms, 0.5)
    assert rep.ok and rep.witness["correlation"] == pytest.approx(0.25)
    assert rep.lhs == pytest.approx(sum(p * plackett_j(0.5, x, y) for x, y, p in atoms), abs=1e-12)
    with pytest.raises(ValueError):
        tz.check_base_case([(a, a, 0.5), (b, b, 0.5)], 0.5)


def test_base_case_sweep():
    rep = tz.base_case_sweep(0.5, 0.1, trials=2000, seed=1)
    assert rep.ok and rep.extra["passed"] == 2000


def test_correlated_expectation_against_enumeration():
    f = cf.random_dyadic(3, 3, 1)
    g = cf.random_dyadic(3, 3, 2)
    rho = 0.3
    ref = 0.0
    for x in range(8):
        for y in range(8):
            d = bin(x ^ y).count("1")
            w = ((1 + rho) / 2) ** (3 - d) * ((1 - rho) / 2) ** d / 8
            ref += w * (float(f.values[x]) - float(g.values[y])) ** 2
    got = tz.correlated_expectation(f, g, rho, lambda a, b: (a - b) ** 2)
    assert got == pytest.approx(ref, abs=1e-14)


def test_tensorization_examples():
    c = cf.constant(3, Fraction(2, 5))
    rep = tz.check_tensorization(c, c, 0.4)
    assert rep.ok and rep.error_term == 0 and rep.lhs == pytest.approx(rep.rhs_main, abs=1e-12)
    m = cf.smooth(cf.majority(5), Fraction(1, 5), 0)
    assert tz.check_tensorization(m, m, 0.4).ok
    d = cf.smooth(cf.dictator(4), Fraction(1, 5), 0)
    rep = tz.check_tensorization(d, d, 0.4)
    assert rep.ok and rep.lhs - rep.rhs_main > 0.01
    with pytest.raises(cf.ResourceError):
        big = cf.constant(9, Fraction(1, 2))
        tz.check_tensorization(big, big, 0.5)
    with pytest.raises(ValueError):
        tz.check_tensorization(d, d, 0.4, eps=0.2)


def test_mist():
    half = cf.constant(3, Fraction(1, 2))
    rep = tz.check_mist(half, 0.5)
    assert rep.ok and rep.lhs == 0.25
    d = tz.check_mist(cf.dictator(5), 0.5)
    assert not d.ok
    assert d.lhs == pytest.approx(0.375) and d.rhs_main == pytest.approx(1 / 3, abs=1e-12)
    for n in (5, 9):
        assert tz.check_mist(cf.majority(n), 0.5).ok
    gaps = [g for _, g in tz.mist_gap_table(0.5, range(5, 16, 2))]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))


def test_borell():
    const = lambda g: np.full(len(g), 0.3)
    rep = tz.borell_block_check(const, const, 0.5, trials=2000)
    assert rep.ok and rep.lhs == pytest.approx(rep.rhs_main, abs=1e-12)
    sig = tz.clipped_sigmoid(0.1)
    rep = tz.borell_block_check(sig, sig, 0.5, m=200, trials=50_000, seed=2)
    assert rep.ok and rep.extra["cube_ok"]
    with pytest.raises(ValueError):
        tz.borell_block_check(sig, sig, 0.5, d=4)


def test_report_json():
    rep = tz.check_base_case([(0.3, 0.6, 1.0)], 0.5, eps=0.1)
    d = rep.to_json()
    assert d["ok"] is True and d["margin"] >= 0
