"""The Gaussian quadrant function J_rho(x, y) and its closed-form derivatives.

J_rho(x, y) = P[X <= s, Y <= t] for a rho-correlated standard Gaussian pair,
with s = Phi^{-1}(x) and t = Phi^{-1}(y).  Writing r = sqrt(1 - rho^2),
u = (t - rho s)/r and v = (s - rho t)/r, the partials used below are

    J_x = Phi(u)                      J_y = Phi(v)
    J_xx = -rho/r * phi(u)/phi(s)     J_yy = -rho/r * phi(v)/phi(t)
    J_xy = phi2(s, t; rho) / (phi(s) phi(t))
    J_xxx = -rho (rho t + (1 - 2 rho^2) s) / r^3 * phi(u)/phi(s)^2
    J_xxy = rho (t - rho s) / r^3 * phi(u)/(phi(s) phi(t))
    dJ/drho = phi2(s, t; rho)

and the remaining third partials follow from the symmetry J(x,y) = J(y,x).
"""
import math
from dataclasses import dataclass

import numpy as np

from . import kernels

SQRT_2PI = math.sqrt(2.0 * math.pi)
RHO_LIMIT = 1.0 - 1e-9
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(10)


class DomainError(ValueError):
    pass


def std_normal_pdf(z):
    return math.exp(-0.5 * z * z) / SQRT_2PI


def std_normal_cdf(z):
    return kernels.ncdf_scalar(float(z))


def std_normal_inv_cdf(p):
    p = float(p)
    if not 0.0 < p < 1.0:
        raise DomainError(f"inverse cdf needs p in (0,1), got {p}")
    return kernels.ninv_scalar(p)


def sheppard_two_sided(rho):
    if abs(rho) > 1:
        raise ValueError("|rho| must be at most 1")
    return 1.0 - math.acos(rho) / math.pi


def _check_rho(rho):
    if not abs(rho) < RHO_LIMIT:
        raise DomainError(f"|rho| must be below {RHO_LIMIT}")


def _check_unit(*vals):
    for v in vals:
        if not 0.0 < v < 1.0:
            raise DomainError(f"argument {v} outside (0,1)")


@dataclass(frozen=True)
class JEvaluator:
    rho: float
    quad_tolerance: float = 1e-12
    tail_cutoff: float = 8.5

    def __post_init__(self):
        _check_rho(self.rho)
        if not self.quad_tolerance > 0:
            raise ValueError("quad_tolerance must be positive")

    @property
    def r(self):
        return math.sqrt(1.0 - self.rho * self.rho)


def _gl(g, a, b):
    h = 0.5 * (b - a)
    return h * sum(w * g(a + h * (z + 1.0)) for z, w in zip(_GL_NODES, _GL_WEIGHTS))


def _adaptive(g, a, b, tol):
    # bisect panels until the 2-panel estimate agrees with the 1-panel one
    if b <= a:
        return 0.0
    total = 0.0
    width = b - a
    stack = []
    edges = np.linspace(a, b, max(int(math.ceil(width)), 1) + 1)
    for lo, hi in zip(edges[:-1], edges[1:]):
        stack.append((lo, hi, _gl(g, lo, hi)))
    while stack:
        lo, hi, whole = stack.pop()
        mid = 0.5 * (lo + hi)
        left, right = _gl(g, lo, mid), _gl(g, mid, hi)
        if abs(left + right - whole) <= tol * (hi - lo) / width or hi - lo < 1e-6:
            total += left + right
        else:
            stack.append((lo, mid, left))
            stack.append((mid, hi, right))
    return total


def j_value(ev, x, y):
    _check_unit(x, y)
    s = std_normal_inv_cdf(x)
    t = std_normal_inv_cdf(y)
    rho, r = ev.rho, ev.r
    lo = -ev.tail_cutoff
    if s <= lo:
        return 0.0

    def g(sp):
        return std_normal_pdf(sp) * std_normal_cdf((t - rho * sp) / r)

    return _adaptive(g, lo, s, ev.quad_tolerance)


def j_array(rho, x, y):
    """Vectorised J_rho on arrays in (0,1) (fixed composite quadrature)."""
    _check_rho(rho)
    x, y = (np.array(a, float) for a in np.broadcast_arrays(x, y))
    if np.any((x <= 0) | (x >= 1) | (y <= 0) | (y >= 1)):
        raise DomainError("arguments must lie in (0,1)")
    return kernels.j_points(kernels.norm_inv_cdf(x), kernels.norm_inv_cdf(y), rho)


def _st(ev, x, y):
    _check_unit(x, y)
    return std_normal_inv_cdf(x), std_normal_inv_cdf(y), ev.rho, ev.r


def j_grad(ev, x, y):
    s, t, rho, r = _st(ev, x, y)
    return std_normal_cdf((t - rho * s) / r), std_normal_cdf((s - rho * t) / r)


def _phi2(s, t, rho, r):
    return math.exp(-(s * s - 2.0 * rho * s * t + t * t) / (2.0 * r * r)) / (2.0 * math.pi * r)


def j_hessian(ev, x, y):
    s, t, rho, r = _st(ev, x, y)
    u = (t - rho * s) / r
    v = (s - rho * t) / r
    ps, pt = std_normal_pdf(s), std_normal_pdf(t)
    jxx = -rho / r * std_normal_pdf(u) / ps
    jyy = -rho / r * std_normal_pdf(v) / pt
    jxy = _phi2(s, t, rho, r) / (ps * pt)
    return np.array([[jxx, jxy], [jxy, jyy]])


def j_third(ev, x, y):
    """(J_xxx, J_xxy, J_xyy, J_yyy)."""
    s, t, rho, r = _st(ev, x, y)
    u = (t - rho * s) / r
    v = (s - rho * t) / r
    ps, pt = std_normal_pdf(s), std_normal_pdf(t)
    pu, pv = std_normal_pdf(u), std_normal_pdf(v)
    r3 = r ** 3
    jxxx = -rho * (rho * t + (1.0 - 2.0 * rho * rho) * s) / r3 * pu / (ps * ps)
    jyyy = -rho * (rho * s + (1.0 - 2.0 * rho * rho) * t) / r3 * pv / (pt * pt)
    jxxy = rho * (t - rho * s) / r3 * pu / (ps * pt)
    jxyy = rho * (s - rho * t) / r3 * pv / (ps * pt)
    return jxxx, jxxy, jxyy, jyyy


def j_drho(ev, x, y):
    s, t, rho, r = _st(ev, x, y)
    d = _phi2(s, t, rho, r)
    assert abs(d) <= (1.0 - rho * rho) ** -1.5
    return d


def j_derivatives(rho, x, y):
    """All closed-form quantities on broadcast arrays; keys J, Jx, ..., Jyyy, Jrho."""
    _check_rho(rho)
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    if np.any((x <= 0) | (x >= 1) | (y <= 0) | (y >= 1)):
        raise DomainError("arguments must lie in (0,1)")
    r = math.sqrt(1.0 - rho * rho)
    s = kernels.norm_inv_cdf(x)
    t = kernels.norm_inv_cdf(y)
    u = (t - rho * s) / r
    v = (s - rho * t) / r

    def pdf(z):
        return np.exp(-0.5 * z * z) / SQRT_2PI

    ps, pt, pu, pv = pdf(s), pdf(t), pdf(u), pdf(v)
    phi2 = np.exp(-(s * s - 2.0 * rho * s * t + t * t) / (2.0 * r * r)) / (2.0 * math.pi * r)
    r3 = r ** 3
    return {
        "J": kernels.j_points(s, t, rho),
        "Jx": kernels.norm_cdf(u),
        "Jy": kernels.norm_cdf(v),
        "Jxx": -rho / r * pu / ps,
        "Jxy": phi2 / (ps * pt),
        "Jyy": -rho / r * pv / pt,
        "Jxxx": -rho * (rho * t + (1.0 - 2.0 * rho * rho) * s) / r3 * pu / (ps * ps),
        "Jxxy": rho * (t - rho * s) / r3 * pu / (ps * pt),
        "Jxyy": rho * (s - rho * t) / r3 * pv / (ps * pt),
        "Jyyy": -rho * (rho * s + (1.0 - 2.0 * rho * rho) * t) / r3 * pv / (pt * pt),
        "Jrho": phi2,
    }


@dataclass(frozen=True)
class HessianLikeMatrix:
    matrix: np.ndarray
    rho: float
    sigma: float
    x: float
    y: float

    def eigenvalues(self):
        (a, b), (_, c) = self.matrix
        mid = 0.5 * (a + c)
        rad = math.hypot(0.5 * (a - c), b)
        return mid - rad, mid + rad


def m_matrix(rho, sigma, x, y):
    """[[J_xx, sigma J_xy], [sigma J_xy, J_yy]] at (x, y)."""
    h = j_hessian(JEvaluator(rho), x, y)
    m = np.array([[h[0, 0], sigma * h[0, 1]], [sigma * h[0, 1], h[1, 1]]])
    return HessianLikeMatrix(m, rho, sigma, x, y)


def m_definiteness(m, rel_tol=1e-9):
    """One of 'PSD∩NSD', 'PSD', 'NSD', 'indefinite'."""
    lo, hi = m.eigenvalues()
    tol = rel_tol * float(np.linalg.norm(m.matrix))
    psd = lo >= -tol
    nsd = hi <= tol
    if psd and nsd:
        return "PSD∩NSD"
    if psd:
        return "PSD"
    if nsd:
        return "NSD"
    return "indefinite"


def third_derivative_bound_report(rho, C=3.0, grid=200):
    """sup over an open grid of |d^3 J| * (x y (1-x)(1-y))^C for each third partial."""
    z = (np.arange(grid) + 0.5) / grid
    X, Y = np.meshgrid(z, z, indexing="ij")
    d = j_derivatives(rho, X, Y)
    w = (X * Y * (1 - X) * (1 - Y)) ** C
    sups = {k: float(np.max(np.abs(d[k]) * w)) for k in ("Jxxx", "Jxxy", "Jxyy", "Jyyy")}
    return {"rho": rho, "C": C, "grid": grid, "sup": sups,
            "finite": all(math.isfinite(v) for v in sups.values())}
