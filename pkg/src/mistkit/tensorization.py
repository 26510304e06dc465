"""Empirical checkers for the J-tensorization inequalities."""
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import cube_fourier as cf
from . import delta_functionals as dl
from . import gaussian_j as gj
from . import kernels
from .linalg import singular_values

QUAD_TOL = 1e-12
# Taylor remainder of order 3: (1/6) M (|x|+|y|)^3 <= (8/6) M (|x|^3+|y|^3) with room to spare
REMAINDER_FACTOR = 8.0 / 6.0


@dataclass
class InequalityReport:
    lhs: float
    rhs_main: float
    error_term: float
    constant_used: dict
    ok: bool
    witness: dict = field(default_factory=dict)
    tolerance: float = QUAD_TOL
    extra: dict = field(default_factory=dict)

    @property
    def margin(self):
        return self.rhs_main + self.error_term + self.tolerance - self.lhs

    def to_json(self):
        return {"lhs": self.lhs, "rhs_main": self.rhs_main, "error_term": self.error_term,
                "constant_used": self.constant_used, "ok": bool(self.ok), "margin": self.margin,
                "tolerance": self.tolerance, "witness": self.witness, **self.extra}


# ---------------------------------------------------------------------------
# Renyi correlation


@dataclass(frozen=True)
class CorrelatedMeasure:
    table: tuple

    def __post_init__(self):
        rows = tuple(tuple(cf.as_rational(v) for v in row) for row in self.table)
        object.__setattr__(self, "table", rows)
        if len({len(r) for r in rows}) != 1:
            raise ValueError("ragged joint table")
        if any(v < 0 for r in rows for v in r):
            raise ValueError("negative probability")
        if sum(v for r in rows for v in r) != 1:
            raise ValueError("joint table must sum to 1")

    def as_array(self):
        return np.array([[float(v) for v in r] for r in self.table])


def resample_measure(marginal, rho):
    """Copy with probability rho, otherwise draw independently from the marginal."""
    p = [cf.as_rational(v) for v in marginal]
    rho = cf.as_rational(rho)
    k = len(p)
    return CorrelatedMeasure(tuple(tuple((rho if a == b else 0) * p[a] + (1 - rho) * p[a] * p[b]
                                         for b in range(k)) for a in range(k)))


def binary_measure(rho):
    """x, y uniform on {-1,1} with E[xy] = rho."""
    rho = cf.as_rational(rho)
    same, diff = (1 + rho) / 4, (1 - rho) / 4
    return CorrelatedMeasure(((same, diff), (diff, same)))


def renyi_correlation(mu):
    P = mu.as_array()
    pa = P.sum(axis=1)
    pb = P.sum(axis=0)
    if np.any(pa <= 0) or np.any(pb <= 0):
        raise ValueError("zero-mass marginal row or column")
    Q = P / np.sqrt(np.outer(pa, pb))
    sv = singular_values(Q)
    return float(sv[1]) if sv.size > 1 else 0.0


# ---------------------------------------------------------------------------
# base case


@lru_cache(maxsize=64)
def base_case_constant(rho, eps, grid=200, safety=1.01):
    """Grid sup of the four third partials of J_rho over [eps, 1-eps]^2, times ``safety``."""
    if not 0 < eps < 0.5:
        raise ValueError("need 0 < eps < 1/2")
    if rho == 0:
        return 0.0
    z = np.linspace(eps, 1.0 - eps, grid)
    X, Y = np.meshgrid(z, z, indexing="ij")
    d = gj.j_derivatives(rho, X, Y)
    sup = max(float(np.max(np.abs(d[k]))) for k in ("Jxxx", "Jxxy", "Jxyy", "Jyyy"))
    return sup * safety


def _infer_eps(*arrays):
    lo = min(float(np.min(np.minimum(a, 1.0 - a))) for a in arrays)
    if not lo > 0:
        raise ValueError("values must lie strictly inside (0,1)")
    return lo


def _correlation(x, y, p):
    mx, my = p @ x, p @ y
    vx = p @ (x - mx) ** 2
    vy = p @ (y - my) ** 2
    if vx <= 1e-300 or vy <= 1e-300:
        return 0.0
    return float(p @ ((x - mx) * (y - my)) / math.sqrt(vx * vy))


def check_base_case(atoms, rho, eps=None, C=None):
    """atoms: iterable of (x, y, prob).  Checks
    E J(X,Y) <= J(EX,EY) + C (E|X - EX|^3 + E|Y - EY|^3)."""
    a = np.array([[float(x), float(y), float(p)] for x, y, p in atoms])
    x, y, p = a[:, 0], a[:, 1], a[:, 2]
    if not 0 < rho < 1:
        raise ValueError("rho must lie in (0,1)")
    if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
        raise ValueError("atom probabilities must form a distribution")
    c = _correlation(x, y, p)
    if c < -1e-12 or c > rho + 1e-12:
        raise ValueError(f"correlation {c} outside [0, {rho}]")
    eps = _infer_eps(x, y) if eps is None else eps
    if C is None:
        C = base_case_constant(rho, round(eps, 15)) * REMAINDER_FACTOR
    mx, my = float(p @ x), float(p @ y)
    lhs = float(p @ gj.j_array(rho, x, y))
    rhs = float(gj.j_array(rho, mx, my))
    err = C * float(p @ (np.abs(x - mx) ** 3 + np.abs(y - my) ** 3))
    ok = lhs <= rhs + err + QUAD_TOL
    return InequalityReport(lhs, rhs, err, {"C": C, "eps": eps}, ok,
                            {"atoms": a.tolist(), "correlation": c})


def random_atom_batch(rho, eps, count, atoms=4, seed=0):
    """Random admissible pair distributions with correlation in [0, rho] (rejection sampling)."""
    rng = np.random.Generator(np.random.Philox(seed))
    xs, ys, ps = [], [], []
    have = 0
    while have < count:
        m = 4 * (count - have) + 16
        x = rng.uniform(eps, 1.0 - eps, size=(m, atoms))
        y = rng.uniform(eps, 1.0 - eps, size=(m, atoms))
        p = rng.dirichlet(np.ones(atoms), size=m)
        mx = np.sum(p * x, axis=1, keepdims=True)
        my = np.sum(p * y, axis=1, keepdims=True)
        cov = np.sum(p * (x - mx) * (y - my), axis=1)
        sd = np.sqrt(np.sum(p * (x - mx) ** 2, axis=1) * np.sum(p * (y - my) ** 2, axis=1))
        corr = cov / sd
        keep = (corr >= 0) & (corr <= rho)
        xs.append(x[keep])
        ys.append(y[keep])
        ps.append(p[keep])
        have += int(keep.sum())
    return (np.concatenate(xs)[:count], np.concatenate(ys)[:count], np.concatenate(ps)[:count])


def base_case_sweep(rho, eps, trials=10_000, atoms=4, seed=0, C=None):
    """Vectorised check_base_case over random admissible distributions."""
    x, y, p = random_atom_batch(rho, eps, trials, atoms, seed)
    if C is None:
        C = base_case_constant(rho, eps) * REMAINDER_FACTOR
    mx = np.sum(p * x, axis=1)
    my = np.sum(p * y, axis=1)
    lhs = np.sum(p * gj.j_array(rho, x, y), axis=1)
    rhs = gj.j_array(rho, mx, my)
    err = C * np.sum(p * (np.abs(x - mx[:, None]) ** 3 + np.abs(y - my[:, None]) ** 3), axis=1)
    margin = rhs + err + QUAD_TOL - lhs
    worst = int(np.argmin(margin))
    passed = int(np.sum(margin >= 0))
    return InequalityReport(
        float(lhs[worst]), float(rhs[worst]), float(err[worst]), {"C": C, "eps": eps}, passed == trials,
        {"x": x[worst].tolist(), "y": y[worst].tolist(), "p": p[worst].tolist()},
        extra={"trials": trials, "passed": passed, "min_margin": float(margin[worst])})


# ---------------------------------------------------------------------------
# tensorization


def correlated_expectation(f, g, rho, fn):
    """E fn(f(X), g(Y)) over rho-correlated X, Y in {-1,1}^n (exhaustive, float)."""
    fv, gv = f.as_float(), g.as_float()
    uf, fi = np.unique(fv, return_inverse=True)
    ug, gi = np.unique(gv, return_inverse=True)
    table = fn(uf[:, None], ug[None, :])
    F = table[fi[:, None], gi[None, :]]
    return kernels.correlated_sum(F, f.n, rho)


def check_tensorization(f, g, rho, eps=None, C_coeff=None, C_exp=0.0, max_n=8):
    if f.n != g.n:
        raise ValueError("dimension mismatch")
    if f.n > max_n:
        raise cf.ResourceError(f"n={f.n} exceeds exhaustive cap {max_n}")
    if not 0 < rho < 1:
        raise ValueError("rho must lie in (0,1)")
    fv, gv = f.as_float(), g.as_float()
    inferred = _infer_eps(fv, gv)
    if eps is None:
        eps = inferred
    elif inferred < eps - 1e-15:
        raise ValueError(f"values leave [{eps}, {1 - eps}]")
    if C_coeff is None:
        C_coeff = base_case_constant(rho, round(eps, 15)) * REMAINDER_FACTOR
    lhs = correlated_expectation(f, g, rho, lambda a, b: gj.j_array(rho, *np.broadcast_arrays(a, b)))
    rhs = float(gj.j_array(rho, float(f.mean()), float(g.mean())))
    df, dg = dl.delta_fourier(f), dl.delta_fourier(g)
    err = C_coeff * eps ** (-C_exp) * float(df + dg)
    ok = lhs <= rhs + err + QUAD_TOL
    return InequalityReport(lhs, rhs, err, {"C_coeff": C_coeff, "C_exp": C_exp, "eps": eps}, ok,
                            {"n": f.n, "delta_f": str(df), "delta_g": str(dg)})


# ---------------------------------------------------------------------------
# Majority is Stablest


def _loglog_ratio(tau):
    L = math.log(1.0 / tau)
    if L <= 1.0:
        return 0.0
    return math.log(L) / L


@lru_cache(maxsize=16)
def fitted_mist_constant(rho, ns=tuple(range(3, 16, 2))):
    """Smallest C with gap(Maj_n) <= C * loglog(1/tau)/log(1/tau) over the given n (not certified)."""
    best = 0.0
    for n in ns:
        rep = _mist_parts(cf.majority(n), rho)
        ratio = _loglog_ratio(rep["tau"])
        if ratio > 0:
            best = max(best, rep["gap"] / ratio)
    return best


def _mist_parts(f, rho):
    fe = f.fourier
    S = cf.stability_bilinear(fe, fe, rho)
    mu = float(fe.mean())
    if 0 < mu < 1:
        J = gj.j_value(gj.JEvaluator(float(rho)), mu, mu)
    else:
        J = mu  # J(0,0) = 0 and J(1,1) = 1
    tau = float(cf.max_influence(fe))
    return {"S": float(S), "S_exact": str(S), "J": J, "tau": tau, "gap": float(S) - J, "mean": mu}


def check_mist(f, rho, C=None, tol=QUAD_TOL):
    if f.range_tag != cf.UNIT:
        raise ValueError("needs a unit_interval function")
    if not 0 < rho < 1:
        raise ValueError("rho must lie in (0,1)")
    parts = _mist_parts(f, rho)
    fitted = C is None
    if fitted:
        C = fitted_mist_constant(float(rho))
    if parts["tau"] == 0:
        err = 0.0
    else:
        err = C * _loglog_ratio(parts["tau"])
    ok = parts["S"] <= parts["J"] + err + tol
    return InequalityReport(parts["S"], parts["J"], err,
                            {"C": C, "fitted": fitted, "certified": False}, ok,
                            {"gap": parts["gap"], "tau": parts["tau"], "mean": parts["mean"]},
                            tol, {"S_exact": parts["S_exact"]})


# ---------------------------------------------------------------------------
# Borell functional inequality, Monte Carlo


def _block_sums(rng, rho, m, trials, d):
    # agreements K ~ Bin(m, (1+rho)/2); u sums the agreeing bits, v the others
    K = rng.binomial(m, 0.5 * (1.0 + rho), size=(trials, d))
    u = 2 * rng.binomial(K, 0.5) - K
    v = 2 * rng.binomial(m - K, 0.5) - (m - K)
    scale = 1.0 / math.sqrt(m)
    return (u + v) * scale, (u - v) * scale


def _mc_side(f1, f2, g1, g2, rho):
    a = np.asarray(f1(g1), float)
    b = np.asarray(f2(g2), float)
    L = gj.j_array(rho, a, b)
    ma, mb = float(a.mean()), float(b.mean())
    rhs = float(gj.j_array(rho, ma, mb))
    jx, jy = gj.j_grad(gj.JEvaluator(rho), ma, mb)
    # delta method: the linearisation removes the first-order noise of J(mean a, mean b)
    D = L - jx * a - jy * b
    stderr = float(D.std(ddof=1) / math.sqrt(L.size))
    return float(L.mean()), rhs, stderr


def borell_block_check(f1, f2, rho, m=200, trials=100_000, d=1, seed=0):
    """Monte Carlo check of E J(f1(G1), f2(G2)) <= J(E f1(G1), E f2(G2)).

    f1, f2 map arrays of shape (N, d) to values in [eps, 1-eps].
    """
    if not 1 <= d <= 3:
        raise ValueError("d must be 1, 2 or 3")
    if not -1 < rho < 1:
        raise ValueError("|rho| must be below 1")
    rng = np.random.Generator(np.random.Philox(seed))
    g1 = rng.standard_normal((trials, d))
    g2 = rho * g1 + math.sqrt(1.0 - rho * rho) * rng.standard_normal((trials, d))
    lhs, rhs, se = _mc_side(f1, f2, g1, g2, rho)
    b1, b2 = _block_sums(rng, rho, m, trials, d)
    clhs, crhs, cse = _mc_side(f1, f2, b1, b2, rho)
    ok = lhs <= rhs + 3.0 * se
    return InequalityReport(lhs, rhs, 3.0 * se, {"m": m, "trials": trials, "d": d, "seed": seed}, ok,
                            {"stderr": se},
                            tolerance=0.0,
                            extra={"cube_lhs": clhs, "cube_rhs": crhs, "cube_stderr": cse,
                                   "cube_ok": bool(clhs <= crhs + 3.0 * cse)})


def clipped_sigmoid(eps=0.1, scale=1.0):
    def f(g):
        z = 1.0 / (1.0 + np.exp(-scale * np.asarray(g)[:, 0]))
        return np.clip(z, eps, 1.0 - eps)
    return f


def mist_gap_table(rho, ns):
    return [(n, _mist_parts(cf.majority(n), rho)["gap"]) for n in ns]
