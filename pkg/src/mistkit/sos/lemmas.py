"""Numeric instantiations of the SoS lemmas with their explicit constants."""
import math
from fractions import Fraction

import numpy as np

from .. import cube_fourier as cf
from .. import delta_functionals as dl
from ..bernstein_approx import JTilde, Poly2, shifted_expansion


def _pair_weight(m, rho):
    # E[x^m y^n] for a rho-correlated pair of bits, when m = n mod 2
    return (1 + rho) / 2 + (-1) ** m * (1 - rho) / 2


def c_gamma_log2(jt):
    """log2 of 2 c K^4 2^(2K) for a JTilde or an exact Poly2."""
    if isinstance(jt, Poly2):
        K = jt.total_degree
        c = jt.c
        return 1.0 + math.log2(c) + 4.0 * math.log2(max(K, 1)) + 2.0 * K
    return jt.log2_c_gamma()


def _values(jt, x, y):
    if isinstance(jt, JTilde):
        return jt.values(x, y)
    return np.array([float(jt(Fraction(float(a)), Fraction(float(b)))) for a, b in zip(x, y)])


def sample_h(eps, count, seed=0):
    """Independent uniform values h_i(+-1) in [eps, 1-eps], shape (count, 4)."""
    rng = np.random.Generator(np.random.Philox(seed))
    return eps + (1.0 - 2.0 * eps) * rng.random((count, 4))


def taylor_lemma_numeric(jtilde, eps, rho_prime, samples=10_000, seed=0, tol=1e-12, h_values=None):
    """Evaluate both sides of the degree-2 Taylor bound with quartic remainder on random h.

    A sample passes when E J~(h0(x), h1(y)) - J~(a0, a1) + eps (b0^2 + b1^2) >= -tol, or when the
    shortfall is covered by c_gamma (b0^4 + b1^4), compared in log2 (c_gamma is astronomically large).
    """
    if not -1.0 < rho_prime < 0.0:
        raise ValueError("rho' must lie in (-1, 0)")
    H = sample_h(eps, samples, seed) if h_values is None else np.asarray(h_values, float)
    if np.any(H < eps - 1e-15) or np.any(H > 1 - eps + 1e-15):
        raise ValueError("h values must lie in [eps, 1 - eps]")
    a0, b0 = (H[:, 0] + H[:, 1]) / 2, (H[:, 0] - H[:, 1]) / 2
    a1, b1 = (H[:, 2] + H[:, 3]) / 2, (H[:, 2] - H[:, 3]) / 2
    if isinstance(jtilde, JTilde):
        V = jtilde.cross_values([a0 + b0, a0, a0 - b0], [a1 + b1, a1, a1 - b1])
        pick = {1: 0, -1: 2}
        grid = lambda sx, sy: V[pick[sx], pick[sy]]
        center = V[1, 1]
    else:
        grid = lambda sx, sy: _values(jtilde, a0 + sx * b0, a1 + sy * b1)
        center = _values(jtilde, a0, a1)
    lhs = np.zeros(len(H))
    for sx in (1, -1):
        for sy in (1, -1):
            lhs += (1 + rho_prime * sx * sy) / 4 * grid(sx, sy)
    quad = b0 ** 2 + b1 ** 2
    quart = b0 ** 4 + b1 ** 4
    d = lhs - center + eps * quad
    lg = c_gamma_log2(jtilde)
    short = -d
    covered = np.zeros(len(H), bool)
    pos = (short > tol) & (quart > 0)
    covered[pos] = lg + np.log2(quart[pos]) >= np.log2(short[pos])
    ok = (short <= tol) | covered
    req = np.where(quart > 0, np.maximum(short, 0.0) / np.where(quart > 0, quart, 1.0), 0.0)
    worst = int(np.argmin(d))
    return {
        "samples": int(len(H)), "passed": int(ok.sum()), "ok": bool(ok.all()),
        "rho_prime": rho_prime, "eps": eps, "log2_c_gamma": lg,
        "K": jtilde.total_degree if isinstance(jtilde, Poly2) else jtilde.K,
        "min_slack_without_quartic": float(d.min()),
        "passes_without_quartic": int((short <= tol).sum()),
        "required_quartic_constant": float(req.max()),
        "witness": {"h": H[worst].tolist(), "slack": float(d[worst])},
    }


def nu_identity_check(poly, rho_prime, samples=5, seed=0, eps=Fraction(1, 10), den=64):
    """Exact check of E J~(h0(x), h1(y)) = sum_{m+n even} nu_mn b0^m b1^n w_m on rational samples,
    plus nu_00 = J~(a), 2 nu_20 = J~_xx(a), 2 nu_02 = J~_yy(a), nu_11 = J~_xy(a)."""
    rho = cf.as_rational(rho_prime)
    eps = cf.as_rational(eps)
    rng = np.random.Generator(np.random.Philox(seed))
    lo, hi = math.ceil(eps * den), math.floor((1 - eps) * den)
    pxx, pyy, pxy = poly.derivative(2, 0), poly.derivative(0, 2), poly.derivative(1, 1)
    results = []
    for _ in range(samples):
        h = [Fraction(int(v), den) for v in rng.integers(lo, hi + 1, size=4)]
        a0, b0 = (h[0] + h[1]) / 2, (h[0] - h[1]) / 2
        a1, b1 = (h[2] + h[3]) / 2, (h[2] - h[3]) / 2
        lhs = Fraction(0)
        for sx in (1, -1):
            for sy in (1, -1):
                lhs += (1 + rho * sx * sy) / 4 * poly(a0 + sx * b0, a1 + sy * b1)
        nu = shifted_expansion(poly, a0, a1)
        rhs = Fraction(0)
        pw0 = [b0 ** m for m in range(nu.shape[0])]
        pw1 = [b1 ** n for n in range(nu.shape[1])]
        for m in range(nu.shape[0]):
            for n in range(m % 2, nu.shape[1], 2):
                if nu[m, n]:
                    rhs += nu[m, n] * pw0[m] * pw1[n] * _pair_weight(m, rho)
        taylor = (nu[0, 0] == poly(a0, a1)
                  and (nu.shape[0] < 3 or 2 * nu[2, 0] == pxx(a0, a1))
                  and (nu.shape[1] < 3 or 2 * nu[0, 2] == pyy(a0, a1))
                  and (min(nu.shape) < 2 or nu[1, 1] == pxy(a0, a1)))
        results.append({"h": [str(v) for v in h], "identity": lhs == rhs, "taylor_coefficients": taylor})
    return {"ok": all(r["identity"] and r["taylor_coefficients"] for r in results), "samples": results}


# ---------------------------------------------------------------------------
# high/low degree split


def d_eta(eta):
    eta = float(eta)
    return math.ceil((1.0 / eta) * math.log(1.0 / eta))


def _chain(coeffs, n):
    return dl.restricted_level1(cf.FourierExpansion(n, tuple(coeffs), cf.FREE))


def _mean(vals):
    return sum(vals, Fraction(0)) / len(vals)


def hypercontractive_check(n, d, seed=0, trials=5, den=8):
    """E l^4 <= 9^d (E l^2)^2 for random rational l of degree <= d."""
    rng = np.random.Generator(np.random.Philox(seed))
    pc = cf.popcounts(n)
    out = []
    for _ in range(trials):
        coeffs = [Fraction(int(rng.integers(-den, den + 1)), den) if pc[S] <= d else Fraction(0)
                  for S in range(1 << n)]
        vals = cf.FourierExpansion(n, tuple(coeffs), cf.FREE).to_function(cf.FREE).values
        e2 = _mean([v * v for v in vals])
        e4 = _mean([v ** 4 for v in vals])
        out.append({"E_l4": e4, "bound": 9 ** d * e2 * e2, "ok": e4 <= 9 ** d * e2 * e2})
    return out


def high_low_split_checks(f, eps, eta, seed=0):
    """Exact evaluation of the split quantities for g = smooth(f, eps, eta) at d_eta."""
    if f.n > 8:
        raise cf.ResourceError("exact restriction sums limited to n <= 8")
    eps, eta = cf.as_rational(eps), cf.as_rational(eta)
    n = f.n
    d = d_eta(eta)
    g = cf.smooth(f, eps, eta)
    ge = g.fourier
    pc = cf.popcounts(n)
    h_coeffs = [c if pc[S] > d else Fraction(0) for S, c in enumerate(ge.coeffs)]
    l_coeffs = [c if pc[S] <= d else Fraction(0) for S, c in enumerate(ge.coeffs)]
    G = dl.restricted_level1(ge)
    Hh = _chain(h_coeffs, n)
    Ll = _chain(l_coeffs, n)
    f612 = sum((_mean([v * v for v in hv]) for hv in Hh), Fraction(0))
    c614 = sum((_mean([a ** 3 * b for a, b in zip(gv, hv)]) for gv, hv in zip(G, Hh)), Fraction(0))
    c615 = sum((_mean([a * a * c * c for a, c in zip(gv, lv)]) for gv, lv in zip(G, Ll)), Fraction(0))
    c616 = sum((_mean([a * a * b * c for a, b, c in zip(gv, hv, lv)]) for gv, hv, lv in zip(G, Hh, Ll)),
               Fraction(0))
    fourth = sum((_mean([a ** 4 for a in gv]) for gv in G), Fraction(0))
    fe = f.fourier
    inf_sq = sum((cf.low_degree_influence(fe, i, min(d, n)) ** 2 for i in range(1, n + 1)), Fraction(0))
    s = math.sqrt(float(eta))
    tail = 9.0 ** d / s * float(inf_sq)
    checks = {
        "high_energy": (f612, float(eta)),
        "cubic_high": (c614, s),
        "quadratic_low": (c615, s + tail),
        "mixed": (c616, 2 * s + tail),
    }
    report = {name: {"value": float(v), "exact": str(v), "bound": b, "ok": float(v) <= b}
              for name, (v, b) in checks.items()}
    report["fourth_moment_split"] = {"exact": fourth == c614 + c615 + c616, "value": float(fourth)}
    hyper = [r for dd in (1, 2, 3) if dd <= n for r in hypercontractive_check(n, dd, seed=seed + dd)]
    report["hypercontractivity"] = {"ok": all(r["ok"] for r in hyper), "cases": len(hyper)}
    report.update({"d_eta": d, "eps": str(eps), "eta": str(eta), "sum_low_influence_sq": float(inf_sq),
                   "g_range": [str(min(g.values)), str(max(g.values))]})
    report["ok"] = (all(report[k]["ok"] for k in checks) and report["fourth_moment_split"]["exact"]
                    and report["hypercontractivity"]["ok"])
    return report
