import math

import numpy as np
import pytest

from mistkit import gaussian_j as gj
from mistkit import kernels
from oracles import plackett_j

POINTS = [(0.3, 0.7), (0.5, 0.5), (0.05, 0.9), (0.8, 0.8), (0.12, 0.34)]


def test_normal_cdf_against_erf():
    z = np.linspace(-8, 8, 401)
    ref = np.array([0.5 * math.erfc(-v / math.sqrt(2)) for v in z])
    assert np.allclose(kernels.norm_cdf(z), ref, rtol=1e-13, atol=1e-300)
    assert gj.std_normal_cdf(0) == pytest.approx(0.5, abs=1e-16)
    for v in (0.5, 1, 2):
        assert gj.std_normal_cdf(v) + gj.std_normal_cdf(-v) == pytest.approx(1.0, abs=1e-15)


def test_inverse_cdf_roundtrip():
    p = np.concatenate([np.logspace(-14, -1, 50), np.linspace(0.1, 0.9, 50), 1 - np.logspace(-12, -1, 50)])
    z = kernels.norm_inv_cdf(p)
    back = np.array([0.5 * math.erfc(-v / math.sqrt(2)) for v in z])
    assert np.allclose(back, p, rtol=1e-12, atol=0)
    assert gj.std_normal_inv_cdf(0.5) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(gj.DomainError):
        gj.std_normal_inv_cdf(1.0)


@pytest.mark.parametrize("rho", [-0.9, -0.5, 0.0, 0.3, 0.75, 0.9])
def test_j_value_against_plackett(rho):
    ev = gj.JEvaluator(rho)
    for x, y in POINTS:
        ref = plackett_j(rho, x, y)
        assert gj.j_value(ev, x, y) == pytest.approx(ref, abs=1e-12)
        assert float(gj.j_array(rho, x, y)) == pytest.approx(ref, abs=1e-12)


def test_sheppard_center():
    for rho in (-0.8, -0.2, 0.1, 0.5, 0.95):
        assert gj.j_value(gj.JEvaluator(rho), 0.5, 0.5) == pytest.approx(0.5 * (1 - math.acos(rho) / math.pi), abs=1e-10)
    assert gj.sheppard_two_sided(0) == 0.5
    assert gj.sheppard_two_sided(0.5) == pytest.approx(2 / 3, abs=1e-15)
    assert gj.sheppard_two_sided(-1) == pytest.approx(0.0, abs=1e-15)


def test_independent_and_comonotone_bounds():
    ev = gj.JEvaluator(0.99)
    for x in (0.1, 0.4, 0.77):
        v = gj.j_value(ev, x, x)
        assert x * x <= v <= x
    ev0 = gj.JEvaluator(0.0)
    assert gj.j_value(ev0, 0.3, 0.6) == pytest.approx(0.18, abs=1e-12)


def test_reflection_identity():
    # P(X <= s, Y <= t) + P(X <= s, -Y <= -t) = P(X <= s)
    x, y = np.meshgrid(np.linspace(0.05, 0.95, 7), np.linspace(0.05, 0.95, 7))
    for rho in (0.3, -0.6):
        assert np.allclose(gj.j_array(rho, x, y) + gj.j_array(-rho, x, 1 - y), x, atol=1e-13)


def test_grad_examples():
    assert gj.j_grad(gj.JEvaluator(0.0), 0.2, 0.9) == pytest.approx((0.9, 0.2), abs=1e-14)
    gx, gy = gj.j_grad(gj.JEvaluator(0.4), 0.5, 0.5)
    assert gx == pytest.approx(gy, abs=1e-15)
    ev = gj.JEvaluator(0.5)
    h = 1e-5
    gx, gy = gj.j_grad(ev, 0.3, 0.7)
    assert gx == pytest.approx((plackett_j(0.5, 0.3 + h, 0.7) - plackett_j(0.5, 0.3 - h, 0.7)) / (2 * h), abs=1e-8)
    assert gy == pytest.approx((plackett_j(0.5, 0.3, 0.7 + h) - plackett_j(0.5, 0.3, 0.7 - h)) / (2 * h), abs=1e-8)


def test_rho_zero_derivatives():
    d = gj.j_derivatives(0.0, 0.3, 0.6)
    assert float(d["Jxx"]) == 0 and float(d["Jyy"]) == 0
    assert float(d["Jxy"]) == pytest.approx(1.0, abs=1e-14)
    for k in ("Jxxx", "Jxxy", "Jxyy", "Jyyy"):
        assert float(d[k]) == 0


def _fd(fn, x, y, axis, h=1e-4):
    # five-point central stencil
    e = (h, 0) if axis == 0 else (0, h)
    f = lambda k: fn(x + k * e[0], y + k * e[1])
    return (-f(2) + 8 * f(1) - 8 * f(-1) + f(-2)) / (12 * h)


@pytest.mark.parametrize("rho", [-0.7, 0.4])
def test_derivatives_against_differences(rho):
    ev = gj.JEvaluator(rho)
    D = lambda key: (lambda a, b: float(gj.j_derivatives(rho, a, b)[key]))
    for x, y in [(0.3, 0.7), (0.6, 0.45)]:
        d = gj.j_derivatives(rho, x, y)
        assert float(d["Jx"]) == pytest.approx(_fd(lambda a, b: plackett_j(rho, a, b), x, y, 0), abs=1e-9)
        assert float(d["Jy"]) == pytest.approx(_fd(lambda a, b: plackett_j(rho, a, b), x, y, 1), abs=1e-9)
        for key, base, axis in [("Jxx", "Jx", 0), ("Jxy", "Jx", 1), ("Jyy", "Jy", 1),
                                ("Jxxx", "Jxx", 0), ("Jxxy", "Jxx", 1), ("Jxyy", "Jxy", 1), ("Jyyy", "Jyy", 1)]:
            fd = _fd(D(base), x, y, axis)
            assert float(d[key]) == pytest.approx(fd, rel=1e-6, abs=1e-8), key
        h = gj.j_hessian(ev, x, y)
        assert h[0, 0] == pytest.approx(float(d["Jxx"]), rel=1e-12)
        assert h[0, 1] == pytest.approx(float(d["Jxy"]), rel=1e-12)


def test_scalar_third_partials_against_hessian_differences():
    ev = gj.JEvaluator(0.35)
    x, y = 0.2, 0.65
    jxxx, jxxy, jxyy, jyyy = gj.j_third(ev, x, y)
    H = lambda i, j: (lambda a, b: gj.j_hessian(ev, a, b)[i, j])
    assert jxxx == pytest.approx(_fd(H(0, 0), x, y, 0), rel=1e-7)
    assert jxxy == pytest.approx(_fd(H(0, 0), x, y, 1), rel=1e-7)
    assert jxyy == pytest.approx(_fd(H(1, 1), x, y, 0), rel=1e-7)
    assert jyyy == pytest.approx(_fd(H(1, 1), x, y, 1), rel=1e-7)


def test_drho_against_difference():
    h = 1e-5
    fd = (plackett_j(0.3 + h, 0.5, 0.5) - plackett_j(0.3 - h, 0.5, 0.5)) / (2 * h)
    assert gj.j_drho(gj.JEvaluator(0.3), 0.5, 0.5) == pytest.approx(fd, rel=1e-6)
    # d/drho of the Sheppard value
    assert gj.j_drho(gj.JEvaluator(0.3), 0.5, 0.5) == pytest.approx(1 / (2 * math.pi * math.sqrt(1 - 0.09)), rel=1e-12)


def test_determinant_identity():
    z = np.linspace(0.05, 0.95, 19)
    X, Y = np.meshgrid(z, z)
    for rho in (-0.8, 0.25, 0.9):
        d = gj.j_derivatives(rho, X, Y)
        lhs = d["Jxx"] * d["Jyy"]
        rhs = rho ** 2 * d["Jxy"] ** 2
        assert np.allclose(lhs, rhs, rtol=1e-8, atol=0)


def test_m_definiteness_examples():
    assert gj.m_definiteness(gj.m_matrix(0.0, 0.0, 0.4, 0.4)) == "PSD∩NSD"
    assert gj.m_definiteness(gj.m_matrix(0.6, 0.3, 0.4, 0.4)) == "NSD"
    assert gj.m_definiteness(gj.m_matrix(-0.6, -0.3, 0.4, 0.4)) == "PSD"
    assert gj.m_definiteness(gj.m_matrix(0.5, 0.9, 0.3, 0.8)) == "indefinite"


def test_domain_errors():
    with pytest.raises(gj.DomainError):
        gj.JEvaluator(1.0)
    with pytest.raises(gj.DomainError):
        gj.j_value(gj.JEvaluator(0.2), 0.0, 0.5)
    with pytest.raises(gj.DomainError):
        gj.j_derivatives(0.2, np.array([0.5, 1.0]), 0.5)


def test_third_derivative_report():
    rep = gj.third_derivative_bound_report(0.5, C=3.0, grid=50)
    assert rep["finite"] and set(rep["sup"]) == {"Jxxx", "Jxxy", "Jxyy", "Jyyy"}
