"""The cubic deviation functional Delta_n and the restriction/Fourier identities."""
from dataclasses import asdict, dataclass
from fractions import Fraction
from itertools import combinations

import numpy as np

from . import cube_fourier as cf


def _cube(q):
    return q * q * abs(q)


def delta_recursive(f):
    """Recursion on the last coordinate:
    Delta_n(f) = E_{x_n} Delta_{n-1}(f_{x_n}) + Delta_1(E[f | x_n]).
    """
    ints, D = cf.int_table(f.values)
    memo = {}

    def rec(lo, m):
        # block of 2^m entries starting at lo; x_m is the top bit of the block
        if m == 0:
            return Fraction(0)
        key = (lo, m)
        if key not in memo:
            half = 1 << (m - 1)
            a_sum = int(ints[lo:lo + half].sum())
            b_sum = int(ints[lo + half:lo + 2 * half].sum())
            diff = Fraction(a_sum - b_sum, half * D)
            memo[key] = (rec(lo, m - 1) + rec(lo + half, m - 1)) / 2 + _cube(diff) / 8
        return memo[key]

    return rec(0, f.n)


def restricted_level1(fe):
    """For i = 1..n, the values f_X^({i}) over X in {-1,1}^{i+1..n}.

    Built from the global coefficients via f_X^(U) = sum_{T in S} chi_T(X) f^(T u U).
    Entry k of the i-th tuple is the assignment whose bit b sets x_{i+1+b} = -1.
    """
    n = fe.n
    ints, D = cf.int_table(fe.coeffs)
    out = []
    for i in range(1, n + 1):
        m = n - i
        # coefficients f^(T u {i}) for T inside {i+1..n}, indexed by T >> i
        idx = (np.arange(1 << m, dtype=np.int64) << i) | (1 << (i - 1))
        vals = cf._butterfly(ints[idx], m)
        out.append(tuple(Fraction(int(v), D) for v in vals))
    return out


def delta_fourier(f):
    """sum_i E_X |f_X^({i})|^3 with X ranging over coordinates i+1..n."""
    fe = f.fourier if isinstance(f, cf.BooleanFunction) else f
    total = Fraction(0)
    for vals in restricted_level1(fe):
        total += sum((_cube(v) for v in vals), Fraction(0)) / len(vals)
    return total


def flip_bound(f):
    """sum_i E |f(X) - f(X^{-i})|^3."""
    ints, D = cf.int_table(f.values)
    idx = np.arange(1 << f.n, dtype=np.int64)
    total = 0
    for j in range(f.n):
        diff = ints[idx ^ (1 << j)] - ints
        total += sum(abs(int(d)) ** 3 for d in diff)
    return Fraction(total, (1 << f.n) * D ** 3)


def _local_mask(U, free):
    pos = {j: b for b, j in enumerate(free)}
    return sum(1 << pos[j] for j in U)


def restriction_coefficient(f, S, x, U):
    """f_x^(U) computed from the restricted table and from the global expansion."""
    S, U = list(S), list(U)
    if set(S) & set(U):
        raise ValueError("S and U must be disjoint")
    g = cf.restrict(f, S, x)
    free = [j for j in range(1, f.n + 1) if j not in S]
    direct = g.fourier.coeffs[_local_mask(U, free)]
    fe = f.fourier
    chi = dict(zip(S, x))
    expanded = Fraction(0)
    for r in range(len(S) + 1):
        for T in combinations(S, r):
            sign = 1
            for j in T:
                sign *= chi[j]
            expanded += sign * fe[cf.mask_of(T) | cf.mask_of(U)]
    if direct != expanded:
        raise AssertionError(f"restriction identity failed: {direct} != {expanded}")
    return direct


def squared_restriction_stats(f, U, S):
    """(E_X |f_X^(U)|^2 over X in {-1,1}^S, whether it is <= Inf_i(f) for every i in U)."""
    S, U = sorted(S), sorted(U)
    if set(S) & set(U):
        raise ValueError("S and U must be disjoint")
    fe = f.fourier
    total = Fraction(0)
    for bits in range(1 << len(S)):
        x = [-1 if (bits >> b) & 1 else 1 for b in range(len(S))]
        c = restriction_coefficient(f, S, x, U)
        total += c * c
    second = total / (1 << len(S))
    weight = Fraction(0)
    for r in range(len(S) + 1):
        for T in combinations(S, r):
            weight += fe[cf.mask_of(T) | cf.mask_of(U)] ** 2
    if weight != second:
        raise AssertionError("second moment differs from the Fourier weight sum")
    ok = all(second <= cf.influence(fe, i) for i in U) if U else True
    return second, ok


def chain_second_moments(f):
    fe = f.fourier if isinstance(f, cf.BooleanFunction) else f
    return [sum((v * v for v in vals), Fraction(0)) / len(vals) for vals in restricted_level1(fe)]


def variance_identity(f):
    """sum_i E_{X in S_i} |f_X^({i})|^2 == Var f, exactly."""
    var = sum((v * v for v in f.values), Fraction(0)) / len(f.values) - f.mean() ** 2
    return sum(chain_second_moments(f), Fraction(0)) == var


def _poly_in_x(table_fn, S):
    # function on {-1,1}^S -> its multilinear coefficients (Fourier transform over S)
    vals = []
    for bits in range(1 << len(S)):
        x = [-1 if (bits >> b) & 1 else 1 for b in range(len(S))]
        vals.append(table_fn(x))
    return cf.fourier_transform(cf.BooleanFunction(len(S), vals, cf.FREE)).coeffs


def noise_restriction_commute(f, sigma, S, U, x=None):
    """Check (T_sigma f)_x^(U) = sigma^|U| T_sigma(f_x^(U)) as polynomials in x."""
    sigma = cf.as_rational(sigma)
    S, U = sorted(S), sorted(U)
    if set(S) & set(U):
        raise ValueError("S and U must be disjoint")
    tf = cf.noise_operator(f.fourier, sigma).to_function(cf.FREE)
    lhs = _poly_in_x(lambda xx: restriction_coefficient(tf, S, xx, U), S)
    base = _poly_in_x(lambda xx: restriction_coefficient(f.with_tag(cf.FREE), S, xx, U), S)
    pc = cf.popcounts(len(S))
    rhs = tuple(sigma ** len(U) * sigma ** int(pc[T]) * c for T, c in enumerate(base))
    ok = lhs == rhs
    if ok and x is not None:
        k = cf.index_of(x)
        ok = (cf.FourierExpansion(len(S), lhs).to_function().values[k]
              == cf.FourierExpansion(len(S), rhs).to_function().values[k])
    return ok


def delta_hyper_bound(f, sigma):
    """(Delta_n(T_sigma f), (max_i Inf_i f)^((1-sigma^2)/(2 sigma^2)), holds)."""
    sigma = cf.as_rational(sigma)
    if sigma * sigma < Fraction(1, 2):
        raise ValueError("needs sigma^2 >= 1/2")
    if any(abs(v) > 1 for v in f.values):
        raise ValueError("f must take values in [-1,1]")
    fe = f.fourier
    lhs = delta_fourier(cf.noise_operator(fe, sigma))
    tau = cf.max_influence(fe)
    s2 = float(sigma) ** 2
    rhs = float(tau) ** ((1.0 - s2) / (2.0 * s2)) if tau > 0 else 0.0
    return lhs, rhs, float(lhs) <= rhs + 1e-12


@dataclass(frozen=True)
class DeltaReport:
    delta_recursive: Fraction
    delta_fourier: Fraction
    flip_bound: Fraction
    max_influence: Fraction
    hyper_bound: float | None = None

    def __post_init__(self):
        assert self.delta_recursive == self.delta_fourier
        assert self.delta_recursive <= self.flip_bound

    def to_json(self):
        return {k: (str(v) if isinstance(v, Fraction) else v) for k, v in asdict(self).items()}


def delta_report(f, sigma=None):
    hyper = None
    if sigma is not None:
        hyper = delta_hyper_bound(f, sigma)[1]
    return DeltaReport(delta_recursive(f), delta_fourier(f), flip_bound(f),
                       cf.max_influence(f.fourier), hyper)
