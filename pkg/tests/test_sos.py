import json
import random
from fractions import Fraction

import numpy as np
import pytest

from mistkit import bernstein_approx as ba
from mistkit import cube_fourier as cf
from mistkit.sos import lemmas
from mistkit.sos import library as lib
from mistkit.sos.polynomial import Polynomial, monomials, parse, variables_of
from mistkit.sos.proofs import (CertificateError, ConstraintSet, MomentError, Proof, PseudoExpectation,
                                SoSCertificate, check_pseudo_expectation, closure_e, closure_g, compose_product,
                                compose_sum, interval_constraints, unconstrained, verify_certificate)
from mistkit.sos.search import search_certificate

HALF = Fraction(1, 2)


# polynomials


def test_arithmetic_against_pointwise_evaluation():
    names, (x, y) = variables_of("x", "y")
    p = 3 * x * x - y + HALF
    q = x * y ** 2 - 1
    rng = random.Random(0)
    for _ in range(20):
        pt = (Fraction(rng.randint(-9, 9), 4), Fraction(rng.randint(-9, 9), 3))
        assert (p * q)(pt) == p(pt) * q(pt)
        assert (p - q)(pt) == p(pt) - q(pt)
        assert (q ** 3)(pt) == q(pt) ** 3
    assert (p - p).is_zero()
    assert p.degree() == 2 and (p * q).degree() == 5


def test_monomial_order():
    assert monomials(2, 2) == [(0, 0), (0, 1), (1, 0), (0, 2), (1, 1), (2, 0)]
    assert len(monomials(3, 4)) == 35


def test_parse():
    names, (y, z) = variables_of("y", "z")
    assert parse("1/2*y^2 - y*z + 3", names) == HALF * y * y - y * z + 3
    assert parse("(y + z)**2", names) == (y + z) ** 2
    assert parse("-(1 - y)", names) == y - 1
    for bad in ("w + 1", "y^z", "y^-1", "y / z", "__import__('os')"):
        with pytest.raises(ValueError):
            parse(bad, names)


def test_json_and_substitute():
    names, (y, z) = variables_of("y", "z")
    p = y ** 3 - Fraction(2, 3) * y * z + 5
    assert Polynomial.from_json(names, json.loads(json.dumps(p.to_json()))) == p
    assert Polynomial.from_json(names, "y^3 - 2/3*y*z + 5") == p
    s = p.substitute({"y": z + 1})
    assert s == (z + 1) ** 3 - Fraction(2, 3) * (z + 1) * z + 5


# closures and certificates


def test_closures():
    A = interval_constraints(("y",))
    y = Polynomial.var(("y",), "y")
    one = Polynomial.constant(("y",), 1)
    got = closure_g(A, 2)
    assert len(got) == 6
    assert set(got) == {one, 1 - y, 1 + y, (1 - y) * (1 + y), (1 - y) ** 2, (1 + y) ** 2}
    x = Polynomial.var(("x",), "x")
    assert closure_e(ConstraintSet(("x",), (x,), ()), 2) == [x, x * x]
    assert closure_g(unconstrained(("x",)), 5) == [Polynomial.constant(("x",), 1)]


def _box_y():
    A = interval_constraints(("y",))
    return A, Polynomial.var(("y",), "y")


def test_hand_certificates():
    A, y = _box_y()
    cert = SoSCertificate(3)
    cert.add_square((1, 0), 1 + y, HALF)
    cert.add_square((0, 1), 1 - y, HALF)
    ok, res = verify_certificate(1 - y * y, A, cert)
    assert ok and res.is_zero()
    cert = SoSCertificate(5)
    cert.add_square((1, 0), y * (1 + y), HALF)
    cert.add_square((0, 1), y * (1 - y), HALF)
    assert verify_certificate(y * y - y ** 4, A, cert)[0]


def test_perturbed_certificate_fails():
    A, y = _box_y()
    cert = SoSCertificate(3)
    cert.add_square((1, 0), 1 + y, HALF + Fraction(1, 1000))
    cert.add_square((0, 1), 1 - y, HALF)
    ok, res = verify_certificate(1 - y * y, A, cert)
    assert not ok and not res.is_zero()


def test_structure_errors():
    A, y = _box_y()
    cert = SoSCertificate(2)
    cert.add_square((1, 0), 1 + y, HALF)
    with pytest.raises(CertificateError):
        verify_certificate(1 - y * y, A, cert)
    cert = SoSCertificate(3)
    cert.add_square((1, 0, 0), 1 + y)
    with pytest.raises(CertificateError):
        verify_certificate(1 - y * y, A, cert)


def test_certificate_json_roundtrip():
    proof = lib.one_minus_square()
    back = Proof.from_json(json.loads(json.dumps(proof.to_json())))
    assert back.verify()[0]
    assert back.h == proof.h


@pytest.mark.parametrize("fid,params,proof", lib.all_library_proofs(),
                         ids=[f"{f}-{i}" for i, (f, _, _) in enumerate(lib.all_library_proofs())])
def test_library_entry_verifies(fid, params, proof):
    ok, res = proof.verify()
    assert ok, res
    assert proof.cert.required_degree(proof.A) <= proof.cert.degree


def test_library_statements():
    y = Polynomial.var(("y",), "y")
    p = lib.power_bound(4)
    assert p.h == 1 - y ** 4 and p.cert.degree == 5 and p.verify()[0]
    names, (yy, z) = variables_of("y", "z")
    assert lib.odd_mixed_bound(3).h == yy ** 4 + z ** 4 - yy * z ** 3
    with pytest.raises(KeyError):
        lib.certificate_library("nope")
    with pytest.raises(ValueError):
        lib.mixed_power_bound(1, 2)


def test_composition_degrees():
    p1, p2 = lib.one_minus_square(), lib.quartic_below_square()
    prod = compose_product(p1, p2)
    assert prod.verify()[0] and prod.cert.degree == p1.cert.degree + p2.cert.degree
    assert prod.h == p1.h * p2.h
    s = compose_sum(p1, p2)
    assert s.verify()[0] and s.cert.degree == max(p1.cert.degree, p2.cert.degree)


# pseudo-expectations


def test_pe_examples():
    names, (y,) = variables_of("y")
    A = ConstraintSet(names, (1 - y * y,), ())
    pe = PseudoExpectation(names, 2, {(0,): 1, (1,): 0, (2,): 1})
    assert check_pseudo_expectation(pe, A).ok
    bad = PseudoExpectation(names, 2, {(0,): 1, (1,): 0, (2,): Fraction(-1, 2)})
    rep = check_pseudo_expectation(bad, unconstrained(names))
    assert not rep.ok and rep.min_eigenvalue < 0
    with pytest.raises(MomentError):
        check_pseudo_expectation(PseudoExpectation(names, 2, {(0,): 1}), A)


def test_pe_cube_measure():
    names, vs = variables_of("a", "b", "c")
    A = ConstraintSet(names, tuple(1 - v * v for v in vs), ())
    pts = [tuple(-1 if k >> j & 1 else 1 for j in range(3)) for k in range(8)]
    pe = PseudoExpectation.from_distribution(names, 4, pts)
    assert pe(vs[0] * vs[0] * vs[1] * vs[1]) == 1 and pe(vs[0] * vs[1]) == 0
    rep = check_pseudo_expectation(pe, A)
    assert rep.ok and rep.max_equality_violation == 0
    back = PseudoExpectation.from_json(json.loads(json.dumps(pe.to_json())))
    assert back.moments == pe.moments


# search


def test_search_square():
    names, (y,) = variables_of("y")
    res = search_certificate(y * y, unconstrained(names), 2)
    assert res.status == "found" and res.proof.verify()[0]


def test_search_interval_quartic():
    A, y = _box_y()
    res = search_certificate(y * y - y ** 4, A, 5)
    assert res.status == "found"
    assert verify_certificate(y * y - y ** 4, A, res.certificate)[0]


def test_search_infeasible_returns_pe():
    names, (y,) = variables_of("y")
    res = search_certificate(1 + y, unconstrained(names), 2)
    assert res.status == "infeasible"
    assert float(res.pe(1 + y)) < 0
    assert res.pe_report.min_eigenvalue > -1e-6


# lemma instantiations


@pytest.fixture(scope="module")
def jt():
    return ba.approximate_j(-0.5, 0.1, 0.05)


def test_taylor_lemma_constant_h(jt):
    H = np.tile([0.3, 0.3, 0.6, 0.6], (5, 1))
    rep = lemmas.taylor_lemma_numeric(jt, 0.1, -0.5, h_values=H)
    assert rep["ok"] and abs(rep["min_slack_without_quartic"]) < 1e-13


def test_taylor_lemma_random(jt):
    rep = lemmas.taylor_lemma_numeric(jt, 0.1, -0.5, samples=2000, seed=3)
    assert rep["ok"] and rep["passed"] == 2000
    with pytest.raises(ValueError):
        lemmas.taylor_lemma_numeric(jt, 0.1, 0.5, samples=10)


def test_nu_identity(jt):
    poly = jt.rung_poly(16)
    rep = lemmas.nu_identity_check(poly, Fraction(-1, 2), samples=3)
    assert rep["ok"]


def test_nu_identity_small_polynomial():
    # the expansion identity holds for any polynomial, e.g. x^2 y + 3 x y^3
    p = ba.Poly2([[0, 0, 0, 0], [0, 0, 0, 3], [0, 1, 0, 0]])
    assert lemmas.nu_identity_check(p, Fraction(-1, 3), samples=4, seed=1)["ok"]


def test_d_eta():
    assert lemmas.d_eta(0.25) == 6
    assert lemmas.d_eta(0.2) == 9


def test_split_checks():
    rep = lemmas.high_low_split_checks(cf.constant(4, Fraction(1, 2)), Fraction(1, 10), Fraction(1, 4))
    assert rep["ok"] and rep["high_energy"]["value"] == 0 and rep["quadratic_low"]["value"] == 0
    rep = lemmas.high_low_split_checks(cf.majority(5), Fraction(1, 10), Fraction(1, 4))
    assert rep["ok"] and rep["d_eta"] == 6 and rep["high_energy"]["value"] == 0
    rep = lemmas.high_low_split_checks(cf.random_dyadic(8, 4, 0), Fraction(1, 10), Fraction(1, 5))
    assert rep["ok"] and rep["fourth_moment_split"]["exact"]


def test_hypercontractivity():
    assert all(r["ok"] for r in lemmas.hypercontractive_check(5, 2, seed=4))
