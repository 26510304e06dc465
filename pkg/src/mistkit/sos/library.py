"""Explicit SoS certificates for elementary bounds on [-1, 1].

Every builder returns a Proof (h, A, certificate) that verifies exactly.
"""
from fractions import Fraction

from .polynomial import Polynomial
from .proofs import (ConstraintSet, Proof, SoSCertificate, compose_product, compose_sum, compose_transitive,
                     convex_substitution, interval_constraints, multiply_square, reflect, scale,
                     trivial_proof)

HALF = Fraction(1, 2)


def _box(names):
    A = interval_constraints(names)
    vs = [Polynomial.var(A.variables, n) for n in A.variables]
    return A, vs


def _gen(A, **powers):
    # exponent tuple over generators [1 - v, 1 + v] per variable
    a = [0] * len(A.inequalities)
    for key, k in powers.items():
        name, side = key[:-1], key[-1]
        i = A.variables.index(name)
        a[2 * i + (0 if side == "m" else 1)] = k
    return tuple(a)


def _one(A):
    return Polynomial.constant(A.variables, 1)


def one_minus_square(name="y", names=None):
    """1 - y^2 = 1/2 (1+y)^2 (1-y) + 1/2 (1-y)^2 (1+y)."""
    A, vs = _box(names or (name,))
    y = vs[A.variables.index(name)]
    cert = SoSCertificate(3)
    cert.add_square(_gen(A, **{name + "m": 1}), 1 + y, HALF)
    cert.add_square(_gen(A, **{name + "p": 1}), 1 - y, HALF)
    return Proof(1 - y * y, A, cert, "one_minus_square")


def power_bound(k, side="upper", name="y", names=None):
    """-1 <= y <= 1 proves y^k <= 1 (side='upper') or y^k >= -1 for odd k (side='lower').

    Degree k+1 for even k, k for odd k.  For even k the lower side is y^k >= 0.
    """
    if k < 0:
        raise ValueError("k must be nonnegative")
    A, vs = _box(names or (name,))
    y = vs[A.variables.index(name)]
    if side == "lower":
        if k % 2 == 0:
            cert = SoSCertificate(k)
            cert.add_square((0,) * len(A.inequalities), y ** (k // 2))
            return Proof(y ** k, A, cert, "power_bound")
        return _rename(reflect(power_bound(k, "upper", name, names), name), "power_bound")
    if side != "upper":
        raise ValueError("side must be 'upper' or 'lower'")
    if k == 0:
        return Proof(Polynomial(A.variables), A, SoSCertificate(0), "power_bound")
    if k == 1:
        cert = SoSCertificate(1)
        cert.add_square(_gen(A, **{name + "m": 1}), _one(A))
        return Proof(1 - y, A, cert, "power_bound")
    if k == 2:
        return _rename(one_minus_square(name, names), "power_bound")
    # 1 - y^k = y^2 (1 - y^(k-2)) + (1 - y^2)
    inner = multiply_square(power_bound(k - 2, "upper", name, names), y)
    out = compose_sum(inner, one_minus_square(name, names))
    out.cert.degree = k + 1 if k % 2 == 0 else k
    return _rename(out, "power_bound")


def _rename(proof, name):
    proof.name = name
    return proof


def quartic_below_square(name="y", names=None):
    """y^2 - y^4 = 1/2 y^2 (1+y)^2 (1-y) + 1/2 (1+y) (1-y)^2 y^2, degree 5."""
    A, vs = _box(names or (name,))
    y = vs[A.variables.index(name)]
    cert = SoSCertificate(5)
    cert.add_square(_gen(A, **{name + "m": 1}), y * (1 + y), HALF)
    cert.add_square(_gen(A, **{name + "p": 1}), y * (1 - y), HALF)
    return Proof(y * y - y ** 4, A, cert, "quartic_below_square")


def even_power_below_quartic(k, name="y", names=None):
    """y^4 - y^(2k) >= 0 for k >= 2, at degree 2k+1, by summing y^(2j-2) >= y^(2j)."""
    if k < 2:
        raise ValueError("k must be at least 2")
    A, vs = _box(names or (name,))
    y = vs[A.variables.index(name)]
    if k == 2:
        return Proof(Polynomial(A.variables), A, SoSCertificate(5), "even_power_below_quartic")
    total = None
    for j in range(3, k + 1):
        # y^(2j-2) - y^(2j) = y^(2j-4) (y^2 - y^4)
        step = multiply_square(quartic_below_square(name, names), y ** (j - 2))
        total = step if total is None else compose_sum(total, step)
    total.cert.degree = 2 * k + 1
    return _rename(total, "even_power_below_quartic")


def convex_substitution_example(lambdas=(Fraction(1, 3), Fraction(2, 3)), base="quartic_below_square"):
    """Substitute y = sum lambda_i z_i into a one-variable interval proof."""
    src = {"quartic_below_square": quartic_below_square, "one_minus_square": one_minus_square}[base]()
    return _rename(convex_substitution(src, lambdas), "convex_substitution")


def mixed_power_bound(m, n, sign=1):
    """{-1<=y<=1, -1<=z<=1} proves y^4 + z^4 - sign y^m z^n >= 0 for m, n >= 2.

    y^4 + z^4 - s y^m z^n = 1/2 (y^m - s z^n)^2 + 1/2 (y^4 - y^2m) + 1/2 (z^4 - z^2n) + 1/2 y^4 + 1/2 z^4
    at degree 1 + max(2m, 2n).
    """
    if m < 2 or n < 2:
        raise ValueError("m, n must be at least 2")
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    names = ("y", "z")
    A, (y, z) = _box(names)
    cert = SoSCertificate(0)
    cert.add_square((0, 0, 0, 0), y ** m - sign * z ** n, HALF)
    cert.add_square((0, 0, 0, 0), y * y, HALF)
    cert.add_square((0, 0, 0, 0), z * z, HALF)
    out = Proof(cert.expand(A), A, cert)
    for var, p in (("y", m), ("z", n)):
        if p > 2:
            out = compose_sum(out, scale(even_power_below_quartic(p, var, names), HALF))
    out.cert.degree = 1 + max(2 * m, 2 * n)
    return _rename(out, "mixed_power_bound")


def _oz_base(sign=1):
    """y^4 + z^4 - s y z^3 = 1/4 (y^2 - z^2)^2 + 1/2 (s yz - z^2)^2 + 3/4 y^4 + 1/4 z^4."""
    names = ("y", "z")
    A, (y, z) = _box(names)
    cert = SoSCertificate(4)
    zero = (0, 0, 0, 0)
    cert.add_square(zero, y * y - z * z, Fraction(1, 4))
    cert.add_square(zero, sign * y * z - z * z, HALF)
    cert.add_square(zero, y * y, Fraction(3, 4))
    cert.add_square(zero, z * z, Fraction(1, 4))
    return Proof(y ** 4 + z ** 4 - sign * y * z ** 3, A, cert)


def odd_mixed_bound(n, sign=1):
    """{-1<=y<=1, -1<=z<=1} proves y^4 + z^4 - sign y z^n >= 0 for odd n >= 3, degree n+2.

    For n > 3: y^4 + z^4 - y z^n = z^(n-3) (y^4 + z^4 - y z^3) + (z^4 - z^(n+1)) + y^4 (1 - z^(n-3)).
    """
    if n < 3 or n % 2 == 0:
        raise ValueError("n must be an odd integer >= 3")
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    names = ("y", "z")
    if sign == -1:
        return _rename(reflect(odd_mixed_bound(n, 1), "y"), "odd_mixed_bound")
    base = _oz_base(1)
    if n == 3:
        base.cert.degree = 5
        return _rename(base, "odd_mixed_bound")
    A, (y, z) = _box(names)
    out = multiply_square(base, z ** ((n - 3) // 2))
    out = compose_sum(out, even_power_below_quartic((n + 1) // 2, "z", names))
    out = compose_sum(out, multiply_square(power_bound(n - 3, "upper", "z", names), y * y))
    out.cert.degree = n + 2
    return _rename(out, "odd_mixed_bound")


def product_bound(sign=1):
    """{0<=x<=1, -z<=y<=z} proves z - sign x y >= 0 via z - xy = z(1-x) + x(z-y), z = (z-y)/2 + (z+y)/2."""
    names = ("x", "y", "z")
    x, y, z = (Polynomial.var(names, v) for v in names)
    A = ConstraintSet(names, (), (x, 1 - x, z - y, z + y))
    g = [trivial_proof(A, i) for i in range(4)]
    zs = compose_sum(scale(g[2], HALF), scale(g[3], HALF))   # z >= 0
    zy = g[2] if sign == 1 else g[3]                          # z - s y >= 0
    out = compose_sum(compose_product(zs, g[1]), compose_product(g[0], zy))
    return _rename(out, "product_bound")


# ---------------------------------------------------------------------------
# composition demonstrations


def compose_sum_example():
    """(1 - y^2) + (y^2 - y^4) >= 0."""
    return _rename(compose_sum(one_minus_square(), quartic_below_square()), "compose_sum")


def compose_product_example():
    """(1 - y^2)(y^2 - y^4) >= 0 at degree 3 + 5."""
    return _rename(compose_product(one_minus_square(), quartic_below_square()), "compose_product")


def compose_transitive_example():
    """{1 - y^2 >= 0} |-_4 1 - y^4 = (1 + y^2)(1 - y^2), chained with -1 <= y <= 1 |-_3 1 - y^2 >= 0."""
    names = ("y",)
    y = Polynomial.var(names, "y")
    B = ConstraintSet(names, (), (1 - y * y,))
    cert = SoSCertificate(4)
    cert.add_square((1,), Polynomial.constant(names, 1))
    cert.add_square((1,), y)
    outer = Proof(1 - y ** 4, B, cert)
    return _rename(compose_transitive(outer, [one_minus_square()]), "compose_transitive")


LIBRARY = {
    "power_bound": power_bound,
    "quartic_below_square": quartic_below_square,
    "convex_substitution": convex_substitution_example,
    "even_power_below_quartic": even_power_below_quartic,
    "mixed_power_bound": mixed_power_bound,
    "odd_mixed_bound": odd_mixed_bound,
    "product_bound": product_bound,
    "compose_sum": compose_sum_example,
    "compose_product": compose_product_example,
    "compose_transitive": compose_transitive_example,
}

DEFAULT_PARAMS = {
    "power_bound": [dict(k=k, side=s) for k in range(1, 9) for s in ("upper", "lower")],
    "quartic_below_square": [{}],
    "convex_substitution": [{}, dict(lambdas=(Fraction(1, 4), Fraction(1, 4), Fraction(1, 2)), base="one_minus_square")],
    "even_power_below_quartic": [dict(k=k) for k in (3, 4, 5)],
    "mixed_power_bound": [dict(m=m, n=n, sign=s) for m, n in ((2, 2), (2, 3), (3, 4)) for s in (1, -1)],
    "odd_mixed_bound": [dict(n=n, sign=s) for n in (3, 5, 7) for s in (1, -1)],
    "product_bound": [dict(sign=1), dict(sign=-1)],
    "compose_sum": [{}],
    "compose_product": [{}],
    "compose_transitive": [{}],
}


def certificate_library(fact_id, **params):
    if fact_id not in LIBRARY:
        raise KeyError(f"unknown library entry {fact_id!r}; known: {sorted(LIBRARY)}")
    return LIBRARY[fact_id](**params)


def all_library_proofs():
    out = []
    for fid, plist in DEFAULT_PARAMS.items():
        for params in plist:
            out.append((fid, params, certificate_library(fid, **params)))
    return out
