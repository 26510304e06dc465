"""Bernstein operators and the polynomial approximation of J_rho.

The two-variable approximant is kept in Bernstein form on the mapped square
u = (x - eps)/(1 - 2 eps).  Its monomial coefficients in the original
variables grow like C(n, n/2) 2^n, so they are only materialised exactly for
small degree; above that a rigorous log-scale bound on their size is used.
"""
import math
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb

import numpy as np

from . import gaussian_j as gj
from . import kernels
from .cube_fourier import ResourceError, as_rational


def _exact(v):
    if isinstance(v, (float, np.floating)):
        return Fraction(float(v))
    return as_rational(v)


def _obj(rows):
    a = np.empty((len(rows), len(rows[0])), dtype=object)
    for i, r in enumerate(rows):
        a[i, :] = list(r)
    return a


def _difference_matrix(n):
    # row j: coefficients of C(n,j) * Delta^j F_0 in terms of F_0..F_n
    return _obj([[comb(n, j) * comb(j, k) * (-1) ** (j - k) if k <= j else 0 for k in range(n + 1)]
                 for j in range(n + 1)])


def _shift_matrix(n, a):
    # A[m, m1] = C(m1, m) a^(m1-m), so that p(a + x) has coefficients A @ mu
    pw = [Fraction(1)]
    for _ in range(n):
        pw.append(pw[-1] * a)
    return _obj([[comb(m1, m) * pw[m1 - m] if m1 >= m else Fraction(0) for m1 in range(n + 1)]
                 for m in range(n + 1)])


class Poly1:
    def __init__(self, coeffs):
        self.coeffs = [_exact(c) for c in coeffs]
        while len(self.coeffs) > 1 and self.coeffs[-1] == 0:
            self.coeffs.pop()

    def __call__(self, x):
        acc = 0
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def __eq__(self, other):
        other = other if isinstance(other, Poly1) else Poly1(other)
        return self.coeffs == other.coeffs

    def __repr__(self):
        return f"Poly1({[str(c) for c in self.coeffs]})"


class Poly2:
    """Dense bivariate polynomial sum mu[m, n] x^m y^n."""

    def __init__(self, coeffs):
        a = np.array(coeffs, dtype=object)
        if a.ndim != 2:
            raise ValueError("coefficient grid must be 2-D")
        a = np.vectorize(_exact, otypes=[object])(a) if a.size else a
        rows = [i for i in range(a.shape[0]) if any(v != 0 for v in a[i])]
        cols = [j for j in range(a.shape[1]) if any(v != 0 for v in a[:, j])]
        a = a[: (max(rows) + 1 if rows else 1), : (max(cols) + 1 if cols else 1)]
        self.mu = a

    @property
    def K(self):
        """Degree bound per variable."""
        return max(self.mu.shape) - 1

    @property
    def total_degree(self):
        degs = [i + j for i in range(self.mu.shape[0]) for j in range(self.mu.shape[1]) if self.mu[i, j] != 0]
        return max(degs, default=0)

    @property
    def c(self):
        return max((abs(v) for v in self.mu.flat), default=Fraction(0))

    def coeff(self, m, n):
        if m < self.mu.shape[0] and n < self.mu.shape[1]:
            return self.mu[m, n]
        return Fraction(0)

    def __call__(self, x, y):
        acc = 0
        for m in range(self.mu.shape[0] - 1, -1, -1):
            row = 0
            for n in range(self.mu.shape[1] - 1, -1, -1):
                row = row * y + self.mu[m, n]
            acc = acc * x + row
        return acc

    def derivative(self, dx=0, dy=0):
        a = self.mu
        for _ in range(dx):
            a = np.array([[a[m, n] * m for n in range(a.shape[1])] for m in range(1, a.shape[0])] or [[0]],
                         dtype=object)
        for _ in range(dy):
            a = np.array([[a[m, n] * n for n in range(1, a.shape[1])] for m in range(a.shape[0])], dtype=object)
            if a.shape[1] == 0:
                a = np.zeros((a.shape[0], 1), dtype=object)
        return Poly2(a)

    def __eq__(self, other):
        if not isinstance(other, Poly2):
            return NotImplemented
        return self.mu.shape == other.mu.shape and all(a == b for a, b in zip(self.mu.flat, other.mu.flat))

    def to_json(self):
        return {"K": self.K, "total_degree": self.total_degree, "basis": "monomial",
                "coeffs": [[m, n, str(self.mu[m, n])] for m in range(self.mu.shape[0])
                           for n in range(self.mu.shape[1]) if self.mu[m, n] != 0],
                "max_abs_coeff": str(self.c)}

    @classmethod
    def from_json(cls, d):
        entries = [(int(m), int(n), Fraction(v)) for m, n, v in d["coeffs"]]
        M = max((m for m, _, _ in entries), default=0) + 1
        N = max((n for _, n, _ in entries), default=0) + 1
        a = np.full((M, N), Fraction(0), dtype=object)
        for m, n, v in entries:
            a[m, n] = v
        return cls(a)


def bernstein_1d(sampler, n):
    """B_n f = sum_{k=0}^n f(k/n) C(n,k) x^k (1-x)^(n-k), expanded in monomials."""
    if n < 1:
        raise ValueError("n must be at least 1")
    F = [_exact(sampler(Fraction(k, n))) for k in range(n + 1)]
    T = _difference_matrix(n)
    return Poly1(list(T.dot(np.array(F, dtype=object))))


def _monomial_from_net(F):
    n = F.shape[0] - 1
    T = _difference_matrix(n)
    return T.dot(F).dot(T.T)


def bernstein_2d(sampler, n):
    """Tensor-product operator (B_n in y of B_n in x) as a monomial Poly2."""
    if n < 1:
        raise ValueError("n must be at least 1")
    F = _obj([[_exact(sampler(Fraction(k, n), Fraction(l, n))) for l in range(n + 1)] for k in range(n + 1)])
    return Poly2(_monomial_from_net(F))


def shifted_expansion(p, a, b):
    """nu with p(a + x, b + y) = sum nu[m, n] x^m y^n."""
    a, b = _exact(a), _exact(b)
    A = _shift_matrix(p.mu.shape[0] - 1, a)
    B = _shift_matrix(p.mu.shape[1] - 1, b)
    return A.dot(p.mu).dot(B.T)


# ---------------------------------------------------------------------------
# approximation of J_rho


def _net_derivative(F, i, j):
    # forward differences of the control net, i times along x and j times along y
    D = F
    for _ in range(i):
        D = D[1:, :] - D[:-1, :]
    for _ in range(j):
        D = D[:, 1:] - D[:, :-1]
    return D


def _falling(n, i):
    out = 1.0
    for r in range(i):
        out *= n - r
    return out


ORDERS = {"J": (0, 0), "Jx": (1, 0), "Jy": (0, 1), "Jxx": (2, 0), "Jxy": (1, 1), "Jyy": (0, 2)}


def bernstein_eval(F, u, v, i=0, j=0, scale=1.0):
    """Partial d^{i+j}/du^i dv^j of the tensor Bernstein polynomial with net F on u x v, divided by scale^{i+j}."""
    n, m = F.shape[0] - 1, F.shape[1] - 1
    if i > n or j > m:
        return np.zeros((np.size(u), np.size(v)))
    D = _net_derivative(F, i, j)
    Bu = kernels.bernstein_basis(n - i, u)
    Bv = kernels.bernstein_basis(m - j, v)
    return _falling(n, i) * _falling(m, j) * (Bu @ D @ Bv.T) / scale ** (i + j)


def sample_net(rho, eps, n):
    """J_rho at (eps + L k/n, eps + L l/n), k, l = 0..n."""
    L = 1.0 - 2.0 * eps
    z = eps + L * np.arange(n + 1) / n
    s = kernels.norm_inv_cdf(z)
    return kernels.j_grid(s, s, rho)


@dataclass
class JTilde:
    rho: float
    eps: float
    delta: float
    n: int
    net: np.ndarray
    ladder: list = field(default_factory=list)
    low_nets: dict = field(default_factory=dict)
    exact_polys: dict = field(default_factory=dict)

    def rung_poly(self, n):
        """Exact monomial form of a low ladder rung (converted on first use)."""
        if n == self.n:
            return self.to_poly2()
        if n not in self.exact_polys:
            if n not in self.low_nets:
                raise KeyError(f"no stored net for degree {n}")
            self.exact_polys[n] = net_to_poly2(self.low_nets[n], self.eps)
        return self.exact_polys[n]

    @property
    def L(self):
        return 1.0 - 2.0 * self.eps

    @property
    def K(self):
        """Total degree."""
        return 2 * self.n

    @property
    def error(self):
        return self.ladder[-1]["error"] if self.ladder else None

    def __call__(self, x, y):
        return self.partial(x, y, 0, 0)

    def partial(self, x, y, i=0, j=0):
        """Grid of partials at the outer product of x and y."""
        u = (np.atleast_1d(np.asarray(x, float)) - self.eps) / self.L
        v = (np.atleast_1d(np.asarray(y, float)) - self.eps) / self.L
        return bernstein_eval(self.net, u, v, i, j, self.L)

    def values(self, x, y):
        """Pointwise values on paired arrays (no outer product)."""
        x = np.atleast_1d(np.asarray(x, float))
        y = np.atleast_1d(np.asarray(y, float))
        out = np.empty(len(x))
        for lo in range(0, len(x), 1024):
            sl = slice(lo, lo + 1024)
            Bu = kernels.bernstein_basis(self.n, (x[sl] - self.eps) / self.L)
            Bv = kernels.bernstein_basis(self.n, (y[sl] - self.eps) / self.L)
            out[sl] = np.sum((Bu @ self.net) * Bv, axis=1)
        return out

    def cross_values(self, xs, ys):
        """Values at (xs[k][i], ys[l][i]) for every k, l, sharing the row contractions; shape (K, L, N)."""
        xs = [np.asarray(v, float) for v in xs]
        ys = [np.asarray(v, float) for v in ys]
        N = len(xs[0])
        out = np.empty((len(xs), len(ys), N))
        for lo in range(0, N, 1024):
            sl = slice(lo, lo + 1024)
            T = [kernels.bernstein_basis(self.n, (v[sl] - self.eps) / self.L) @ self.net for v in xs]
            for l_, v in enumerate(ys):
                Bv = kernels.bernstein_basis(self.n, (v[sl] - self.eps) / self.L)
                for k, Tk in enumerate(T):
                    out[k, l_, sl] = np.sum(Tk * Bv, axis=1)
        return out

    def to_poly2(self, cap=128):
        """Exact monomial coefficients in the original variables (cost O(n^3) big rationals)."""
        if self.n > cap:
            raise ResourceError(f"exact conversion of degree {self.n} exceeds cap {cap}")
        if self.n not in self.exact_polys:
            self.exact_polys[self.n] = net_to_poly2(self.net, self.eps)
        return self.exact_polys[self.n]

    def log2_coeff_bound(self):
        return log2_coeff_bound(self.net, self.eps)

    def coeff_info(self, cap=64):
        """(c, exact?) with c exact when the conversion is affordable, else a rigorous upper bound."""
        if self.n <= cap:
            return self.to_poly2(cap).c, True
        return 2.0 ** self.log2_coeff_bound() if self.log2_coeff_bound() < 1000 else math.inf, False

    def log2_c_gamma(self, cap=64):
        """log2 of 2 c K^4 2^(2K)."""
        c, exact = self.coeff_info(cap)
        lc = math.log2(c) if exact else self.log2_coeff_bound()
        return 1.0 + lc + 4.0 * math.log2(self.K) + 2.0 * self.K

    def to_json(self):
        return {"K": self.K, "degree_per_variable": self.n, "basis": "bernstein",
                "domain": [self.eps, 1.0 - self.eps], "rho": self.rho, "eps": self.eps, "delta": self.delta,
                "coeffs": [[k, l, float(self.net[k, l])] for k in range(self.n + 1) for l in range(self.n + 1)],
                "log2_max_abs_coeff_bound": self.log2_coeff_bound(),
                "max_abs_coeff": self._c_json(),
                "ladder": self.ladder}

    def _c_json(self):
        c, exact = self.coeff_info()
        return {"value": str(c) if exact else c, "exact": exact}

    @classmethod
    def from_json(cls, d):
        n = int(d["degree_per_variable"])
        net = np.zeros((n + 1, n + 1))
        for k, l, v in d["coeffs"]:
            net[int(k), int(l)] = float(v)
        return cls(float(d["rho"]), float(d["eps"]), float(d["delta"]), n, net, list(d.get("ladder", [])))


def net_to_poly2(net, eps):
    """Exact monomial Poly2 in (x, y) of the Bernstein polynomial on the mapped square."""
    n = net.shape[0] - 1
    eps_q = _exact(eps) if not isinstance(eps, float) else Fraction(repr(eps))
    L = 1 - 2 * eps_q
    F = _obj([[Fraction(float(v)) for v in row] for row in net])
    P = _monomial_from_net(F)
    # u^i = L^-i (x - eps)^i = sum_m C(i,m) (-eps)^(i-m) L^-i x^m
    S = _obj([[comb(i, m) * (-eps_q) ** (i - m) / L ** i if i >= m else Fraction(0) for i in range(n + 1)]
              for m in range(n + 1)])
    return Poly2(S.dot(P).dot(S.T))


def _log2_binom(n, k):
    return (math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)) / math.log(2)


def log2_coeff_bound(net, eps):
    """log2 of an upper bound on max |mu[m, n]| of the monomial form.

    |C(n,i) Delta^i Delta^j F| <= C(n,i) C(n,j) 2^(i+j) max|F|, pushed through the
    affine substitution with absolute values.
    """
    n = net.shape[0] - 1
    L = 1.0 - 2.0 * eps
    best = -math.inf
    for m in range(n + 1):
        terms = [_log2_binom(n, i) + i + _log2_binom(i, m) + (i - m) * math.log2(eps) - i * math.log2(L)
                 for i in range(m, n + 1)]
        top = max(terms)
        best = max(best, top + math.log2(sum(2.0 ** (t - top) for t in terms)))
    fmax = float(np.max(np.abs(net)))
    return 2.0 * best + (math.log2(fmax) if fmax > 0 else -math.inf)


def validation_error(rho, eps, net, grid=101):
    """Max abs error of value and all partials of order <= 2 against the closed forms."""
    z = np.linspace(eps, 1.0 - eps, grid)
    L = 1.0 - 2.0 * eps
    u = (z - eps) / L
    X, Y = np.meshgrid(z, z, indexing="ij")
    truth = gj.j_derivatives(rho, X, Y)
    errs = {}
    for key, (i, j) in ORDERS.items():
        approx = bernstein_eval(net, u, u, i, j, L)
        errs[key] = float(np.max(np.abs(approx - truth[key])))
    return max(errs.values()), errs


def approximate_j(rho, eps, delta, n0=16, cap=4096, grid=101, exact_cap=64):
    """Double n until the C^2 error on the validation grid is at most delta."""
    if not -1 < rho < 1:
        raise ValueError("rho must lie in (-1,1)")
    if not 0 < eps < 0.5:
        raise ValueError("eps must lie in (0,1/2)")
    if not delta > 0:
        raise ValueError("delta must be positive")
    ladder = []
    low = {}
    n = n0
    while True:
        net = sample_net(rho, eps, n)
        err, parts = validation_error(rho, eps, net, grid)
        ladder.append({"n": n, "error": err, "parts": parts})
        if n <= exact_cap:
            low[n] = net
        if err <= delta:
            return JTilde(rho, eps, delta, n, net, ladder, low)
        if 2 * n > cap:
            raise ResourceError(f"tolerance {delta} not met by n={n} (error {err}); ladder: {ladder}")
        n *= 2


def ladder_ratios(ladder):
    """error(n) / error(n/4) for every rung whose quarter is on the ladder."""
    by_n = {r["n"]: r["error"] for r in ladder}
    return [(r["n"], r["error"] / by_n[r["n"] // 4]) for r in ladder if r["n"] // 4 in by_n and by_n[r["n"] // 4] > 0]
