"""Exact Fourier analysis on the discrete cube {-1,1}^n.

Index convention: bit j of a table index encodes x_{j+1}, with bit 0 meaning
x = +1 and bit 1 meaning x = -1.  A subset S of [n] is the bitmask with bit
j set iff j+1 is in S.
"""
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from math import lcm

import numpy as np

from . import kernels

UNIT = "unit_interval"
SIGNED = "signed_unit"
FREE = "unrestricted"
RANGE_TAGS = (UNIT, SIGNED, FREE)

MAX_TRANSFORM_N = 22
MAX_MAJORITY_N = 10_000


class ResourceError(RuntimeError):
    pass


def as_rational(v):
    """Exact Fraction from int/Fraction/str; floats go through their shortest repr."""
    if isinstance(v, Fraction):
        return v
    if isinstance(v, (int, np.integer)):
        return Fraction(int(v))
    if isinstance(v, (float, np.floating)):
        return Fraction(repr(float(v)))
    return Fraction(v)


def popcounts(n):
    return np.bitwise_count(np.arange(1 << n, dtype=np.uint64)).astype(np.int64)


def mask_of(S):
    m = 0
    for i in S:
        m |= 1 << (i - 1)
    return m


def set_of(mask):
    out = []
    j = 0
    while mask:
        if mask & 1:
            out.append(j + 1)
        mask >>= 1
        j += 1
    return tuple(out)


def point_of(index, n):
    return tuple(-1 if (index >> j) & 1 else 1 for j in range(n))


def index_of(x):
    idx = 0
    for j, xj in enumerate(x):
        if xj == -1:
            idx |= 1 << j
        elif xj != 1:
            raise ValueError(f"coordinate {j + 1} is {xj}, expected +-1")
    return idx


def int_table(values):
    """Common-denominator integer representation: values = ints / D."""
    D = 1
    for v in values:
        D = lcm(D, v.denominator)
    ints = [v.numerator * (D // v.denominator) for v in values]
    big = max((abs(i) for i in ints), default=0)
    if big.bit_length() + 24 < 63:
        arr = np.array(ints, dtype=np.int64)
    else:
        arr = np.empty(len(ints), dtype=object)
        arr[:] = ints
    return arr, D


def _butterfly(arr, n):
    # unnormalised Walsh-Hadamard transform, n * 2^(n-1) add/sub pairs
    a = arr.copy()
    for j in range(n):
        v = a.reshape(-1, 2, 1 << j)
        lo = v[:, 0, :].copy()
        hi = v[:, 1, :]
        v[:, 0, :] = lo + hi
        v[:, 1, :] = lo - hi
    return a


def _fractions(arr, denom):
    return tuple(Fraction(int(a), denom) for a in arr)


@dataclass(frozen=True)
class FourierExpansion:
    n: int
    coeffs: tuple
    range_tag: str = FREE

    def __post_init__(self):
        if len(self.coeffs) != 1 << self.n:
            raise ValueError("coefficient table must have length 2^n")

    def __getitem__(self, S):
        return self.coeffs[S if isinstance(S, int) else mask_of(S)]

    def mean(self):
        return self.coeffs[0]

    def weight(self):
        return sum(c * c for c in self.coeffs)

    def to_function(self, range_tag=None):
        arr, D = int_table(self.coeffs)
        vals = _fractions(_butterfly(arr, self.n), D)
        return BooleanFunction(self.n, vals, range_tag or self.range_tag)


@dataclass(frozen=True)
class BooleanFunction:
    n: int
    values: tuple
    range_tag: str = UNIT

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("n must be nonnegative")
        vals = tuple(as_rational(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        if len(vals) != 1 << self.n:
            raise ValueError(f"expected {1 << self.n} values, got {len(vals)}")
        if self.range_tag not in RANGE_TAGS:
            raise ValueError(f"unknown range tag {self.range_tag!r}")
        if self.range_tag == UNIT and any(v < 0 or v > 1 for v in vals):
            raise ValueError("values outside [0,1] for unit_interval function")
        if self.range_tag == SIGNED and any(v < -1 or v > 1 for v in vals):
            raise ValueError("values outside [-1,1] for signed_unit function")

    def __call__(self, x):
        return self.values[index_of(x)]

    @cached_property
    def fourier(self):
        return fourier_transform(self)

    def mean(self):
        return sum(self.values) / len(self.values)

    def as_float(self):
        return np.array([float(v) for v in self.values])

    def value_range(self):
        return min(self.values), max(self.values)

    def with_tag(self, range_tag):
        return BooleanFunction(self.n, self.values, range_tag)

    def complement(self):
        return BooleanFunction(self.n, tuple(1 - v for v in self.values), self.range_tag)


def fourier_transform(f, max_n=MAX_TRANSFORM_N):
    if f.n > max_n:
        raise ResourceError(f"n={f.n} exceeds transform cap {max_n}")
    arr, D = int_table(f.values)
    return FourierExpansion(f.n, _fractions(_butterfly(arr, f.n), D << f.n), f.range_tag)


def _check_coord(n, i):
    if not 1 <= i <= n:
        raise ValueError(f"coordinate {i} out of range 1..{n}")


def influence(fe, i):
    """Fourier-weight influence: sum of f^(S)^2 over S containing i."""
    _check_coord(fe.n, i)
    bit = 1 << (i - 1)
    return sum((c * c for S, c in enumerate(fe.coeffs) if S & bit), Fraction(0))


def low_degree_influence(fe, i, d):
    _check_coord(fe.n, i)
    if not 0 <= d <= fe.n:
        raise ValueError("degree out of range")
    bit = 1 << (i - 1)
    pc = popcounts(fe.n)
    return sum((c * c for S, c in enumerate(fe.coeffs) if S & bit and pc[S] <= d), Fraction(0))


def max_influence(fe):
    return max((influence(fe, i) for i in range(1, fe.n + 1)), default=Fraction(0))


def flip_influence(f, i):
    """P[f(x) != f(x with x_i negated)] for a {0,1}-valued f.

    For such f this equals 4 times the Fourier-weight influence.
    """
    _check_coord(f.n, i)
    if any(v not in (0, 1) for v in f.values):
        raise ValueError("flip influence needs a {0,1}-valued function")
    bit = 1 << (i - 1)
    flips = sum(1 for x in range(1 << f.n) if f.values[x] != f.values[x ^ bit])
    return Fraction(flips, 1 << f.n)


def _powers(sigma, n):
    out = [Fraction(1)]
    for _ in range(n):
        out.append(out[-1] * sigma)
    return out


def noise_operator(fe, sigma):
    sigma = as_rational(sigma)
    if abs(sigma) > 1:
        raise ValueError("|sigma| must be at most 1")
    pw = _powers(sigma, fe.n)
    pc = popcounts(fe.n)
    return FourierExpansion(fe.n, tuple(c * pw[pc[S]] for S, c in enumerate(fe.coeffs)), fe.range_tag)


def stability_bilinear(fe, ge, rho):
    """E f(x) g(y) over rho-correlated pairs, computed spectrally."""
    if fe.n != ge.n:
        raise ValueError("dimension mismatch")
    rho = as_rational(rho)
    if abs(rho) > 1:
        raise ValueError("|rho| must be at most 1")
    pw = _powers(rho, fe.n)
    pc = popcounts(fe.n)
    return sum((pw[pc[S]] * a * b for S, (a, b) in enumerate(zip(fe.coeffs, ge.coeffs)) if a and b),
               Fraction(0))


def stab_two_sided(fe, rho):
    if fe.range_tag != UNIT:
        raise ValueError("two-sided stability needs a unit_interval function")
    return 1 - 2 * fe.mean() + 2 * stability_bilinear(fe, fe, rho)


def restrict(f, S, x):
    """Fix coordinates S (1-based) to the +-1 values x; the rest keep ascending order."""
    S = list(S)
    x = list(x)
    if len(S) != len(x):
        raise ValueError("S and x differ in length")
    if len(set(S)) != len(S):
        raise ValueError("repeated coordinate in S")
    for i in S:
        _check_coord(f.n, i)
    fixed = 0
    for i, xi in zip(S, x):
        if xi == -1:
            fixed |= 1 << (i - 1)
        elif xi != 1:
            raise ValueError("assignment values must be +-1")
    free = [j for j in range(1, f.n + 1) if j not in S]
    m = len(free)
    vals = []
    for k in range(1 << m):
        idx = fixed
        for b, j in enumerate(free):
            if (k >> b) & 1:
                idx |= 1 << (j - 1)
        vals.append(f.values[idx])
    return BooleanFunction(m, tuple(vals), f.range_tag)


def smooth(f, eps, eta):
    """g = T_{1-eta}((1-eps) f + eps/2); the result lies in [eps/2, 1-eps/2]."""
    eps = as_rational(eps)
    eta = as_rational(eta)
    if not (0 <= eps < 1 and 0 <= eta < 1):
        raise ValueError("need 0 <= eps < 1 and 0 <= eta < 1")
    if f.range_tag != UNIT:
        raise ValueError("smoothing needs a unit_interval function")
    f2 = tuple((1 - eps) * v + eps / 2 for v in f.values)
    lo, hi = eps / 2, 1 - eps / 2
    assert all(lo <= v <= hi for v in f2)
    if eta == 0:
        return BooleanFunction(f.n, f2, UNIT)
    fe = fourier_transform(BooleanFunction(f.n, f2, UNIT))
    g = noise_operator(fe, 1 - eta).to_function(UNIT)
    # T_sigma averages over a probability measure, so the bracket survives
    assert all(lo <= v <= hi for v in g.values)
    return g


def majority_stability_dp(n, rho):
    if n % 2 == 0 or n < 1:
        raise ValueError("majority needs odd n")
    if n > MAX_MAJORITY_N:
        raise ResourceError(f"n={n} exceeds cap {MAX_MAJORITY_N}")
    if not abs(float(rho)) < 1:
        raise ValueError("|rho| must be below 1")
    return kernels.majority_stab(n, float(rho))


# ---------------------------------------------------------------------------
# constructors


def majority(n):
    if n % 2 == 0 or n < 1:
        raise ValueError("majority needs odd n")
    pc = popcounts(n)
    # popcount counts the -1 coordinates
    return BooleanFunction(n, tuple(1 if 2 * int(c) < n else 0 for c in pc), UNIT)


def dictator(n, i=1):
    _check_coord(n, i)
    bit = 1 << (i - 1)
    return BooleanFunction(n, tuple(0 if x & bit else 1 for x in range(1 << n)), UNIT)


def parity(n, S):
    m = mask_of(S)
    if m >> n:
        raise ValueError("S not inside [n]")
    pc = popcounts(n)
    return BooleanFunction(n, tuple(-1 if pc[x & m] % 2 else 1 for x in range(1 << n)), SIGNED)


def constant(n, c, range_tag=UNIT):
    return BooleanFunction(n, (as_rational(c),) * (1 << n), range_tag)


def random_dyadic(n, denominator_bits, seed, signed=False):
    """Dyadic table k / 2^bits in [0,1], or in [-1,1] when ``signed``."""
    rng = np.random.default_rng(seed)
    top = 1 << denominator_bits
    if signed:
        ks = rng.integers(-top, top + 1, size=1 << n)
        return BooleanFunction(n, tuple(Fraction(int(k), top) for k in ks), SIGNED)
    ks = rng.integers(0, top + 1, size=1 << n)
    return BooleanFunction(n, tuple(Fraction(int(k), top) for k in ks), UNIT)
