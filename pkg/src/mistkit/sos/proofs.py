"""Constraint sets, degree-d closures, SoS certificates and pseudo-expectations.

Certificates are stored against closure *keys*: an equality term is keyed by
(constraint index, multiplier monomial) and an inequality term by the exponent
tuple of the generator product.  Closure indices are only used on the wire.
"""
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product as iproduct
from math import factorial

import numpy as np

from ..cube_fourier import ResourceError, as_rational
from ..linalg import min_eigenvalue
from .polynomial import Polynomial, grlex_key, monomials

MAX_CLOSURE = 20000


class CertificateError(ValueError):
    """Structurally invalid certificate (bad index or degree bound)."""


@dataclass(frozen=True)
class ConstraintSet:
    variables: tuple
    equalities: tuple = ()
    inequalities: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "equalities", tuple(self.equalities))
        object.__setattr__(self, "inequalities", tuple(self.inequalities))
        for p in self.equalities + self.inequalities:
            if p.variables != self.variables:
                raise ValueError("constraint over a different variable list")

    def holds_at(self, point, tol=0):
        return (all(abs(p(point)) <= tol for p in self.equalities)
                and all(q(point) >= -tol for q in self.inequalities))

    def to_json(self):
        return {"variables": list(self.variables),
                "equalities": [p.to_json() for p in self.equalities],
                "inequalities": [q.to_json() for q in self.inequalities]}

    @classmethod
    def from_json(cls, d):
        v = tuple(d["variables"])
        return cls(v, [Polynomial.from_json(v, p) for p in d.get("equalities", [])],
                   [Polynomial.from_json(v, q) for q in d.get("inequalities", [])])


def interval_constraints(variables, a=-1, b=1):
    """a <= v <= b for every variable, as the generators b - v and v - a."""
    variables = tuple(variables)
    gens = []
    for name in variables:
        v = Polynomial.var(variables, name)
        gens.extend([b - v, v - a])
    return ConstraintSet(variables, (), gens)


def unconstrained(variables):
    return ConstraintSet(tuple(variables))


# ---------------------------------------------------------------------------
# closures


def _closure_e_table(A, d):
    keys, polys, index = [], [], {}
    seen = {}
    n = len(A.variables)
    for i, p in enumerate(A.equalities):
        dp = p.degree()
        if dp > d:
            continue
        for mono in monomials(n, d - dp):
            poly = p.shift_monomial(mono)
            if poly in seen:
                index[(i, mono)] = seen[poly]
                continue
            seen[poly] = len(polys)
            index[(i, mono)] = len(polys)
            keys.append((i, mono))
            polys.append(poly)
            if len(polys) > MAX_CLOSURE:
                raise ResourceError("equality closure too large")
    return keys, polys, index


def _exponent_tuples(degs, d):
    out = []

    def rec(i, left, acc):
        if i == len(degs):
            out.append(tuple(acc))
            return
        top = (left // degs[i]) if degs[i] > 0 else 1
        for a in range(top + 1):
            rec(i + 1, left - a * degs[i], acc + [a])
            if len(out) > MAX_CLOSURE:
                raise ResourceError("inequality closure too large")

    rec(0, d, [])
    return out


def gen_product(A, a, cache=None):
    if cache is not None and a in cache:
        return cache[a]
    out = Polynomial.constant(A.variables, 1)
    for q, k in zip(A.inequalities, a):
        if k:
            out = out * q ** k
    if cache is not None:
        cache[a] = out
    return out


def _closure_g_table(A, d):
    degs = [q.degree() for q in A.inequalities]
    tuples = _exponent_tuples(degs, d)
    tuples.sort(key=lambda a: (sum(k * g for k, g in zip(a, degs)), tuple(-k for k in a)))
    keys, polys, index, seen = [], [], {}, {}
    for a in tuples:
        poly = gen_product(A, a)
        if poly in seen:
            index[a] = seen[poly]
            continue
        seen[poly] = len(polys)
        index[a] = len(polys)
        keys.append(a)
        polys.append(poly)
    return keys, polys, index


def closure_e(A, d):
    if d < 0:
        raise ValueError("d must be nonnegative")
    return _closure_e_table(A, d)[1]


def closure_g(A, d):
    if d < 0:
        raise ValueError("d must be nonnegative")
    return _closure_g_table(A, d)[1]


# ---------------------------------------------------------------------------
# certificates


def _weighted(sq):
    if isinstance(sq, Polynomial):
        return Fraction(1), sq
    w, r = sq
    return as_rational(w), r


@dataclass
class SoSCertificate:
    degree: int
    equality_terms: dict = field(default_factory=dict)     # (i, mono) -> alpha
    inequality_terms: dict = field(default_factory=dict)   # a-tuple -> [(weight, r)]

    def add_square(self, a, r, weight=1):
        weight = as_rational(weight)
        if weight == 0 or r.is_zero():
            return
        self.inequality_terms.setdefault(tuple(a), []).append((weight, r))

    def add_equality(self, key, alpha):
        alpha = as_rational(alpha)
        i, mono = key
        key = (i, tuple(mono))
        self.equality_terms[key] = self.equality_terms.get(key, Fraction(0)) + alpha
        if self.equality_terms[key] == 0:
            del self.equality_terms[key]

    def copy(self):
        return SoSCertificate(self.degree, dict(self.equality_terms),
                              {a: list(v) for a, v in self.inequality_terms.items()})

    def required_degree(self, A):
        need = 0
        for (i, mono) in self.equality_terms:
            need = max(need, sum(mono) + A.equalities[i].degree())
        for a, sqs in self.inequality_terms.items():
            base = sum(k * q.degree() for k, q in zip(a, A.inequalities))
            for _, r in sqs:
                need = max(need, base + 2 * r.degree())
        return need

    def equality_poly(self, A):
        out = Polynomial(A.variables)
        for (i, mono), alpha in self.equality_terms.items():
            out = out + alpha * A.equalities[i].shift_monomial(mono)
        return out

    def expand(self, A):
        cache = {}
        out = self.equality_poly(A)
        for a, sqs in self.inequality_terms.items():
            s = Polynomial(A.variables)
            for w, r in sqs:
                s = s + w * r * r
            out = out + s * gen_product(A, a, cache)
        return out

    def check_structure(self, A):
        for (i, mono), _ in self.equality_terms.items():
            if not 0 <= i < len(A.equalities) or len(mono) != len(A.variables):
                raise CertificateError(f"bad equality term {(i, mono)}")
            if sum(mono) + A.equalities[i].degree() > self.degree:
                raise CertificateError(f"equality term {(i, mono)} exceeds degree {self.degree}")
        for a, sqs in self.inequality_terms.items():
            if len(a) != len(A.inequalities) or min(a, default=0) < 0:
                raise CertificateError(f"bad generator tuple {a}")
            base = sum(k * q.degree() for k, q in zip(a, A.inequalities))
            for w, r in sqs:
                if w < 0:
                    raise CertificateError("negative square weight")
                if r.variables != A.variables:
                    raise CertificateError("square over the wrong variables")
                if base + 2 * r.degree() > self.degree:
                    raise CertificateError(f"term {a} with square of degree {r.degree()} exceeds degree {self.degree}")

    # wire format
    def to_json(self, A):
        _, _, eidx = _closure_e_table(A, self.degree)
        _, _, gidx = _closure_g_table(A, self.degree)
        eq = {}
        for key, alpha in self.equality_terms.items():
            if key not in eidx:
                raise CertificateError(f"equality term {key} not in the degree-{self.degree} closure")
            eq[eidx[key]] = eq.get(eidx[key], Fraction(0)) + alpha
        ineq = {}
        for a, sqs in self.inequality_terms.items():
            if a not in gidx:
                raise CertificateError(f"generator tuple {a} not in the degree-{self.degree} closure")
            ineq.setdefault(gidx[a], []).extend(sqs)
        return {"degree": self.degree,
                "equality_terms": [[k, str(v)] for k, v in sorted(eq.items()) if v != 0],
                "inequality_terms": [[k, [r.to_json() if w == 1 else [str(w), r.to_json()] for w, r in sqs]]
                                     for k, sqs in sorted(ineq.items())]}

    @classmethod
    def from_json(cls, d, A):
        deg = int(d["degree"])
        ekeys = _closure_e_table(A, deg)[0]
        gkeys = _closure_g_table(A, deg)[0]
        cert = cls(deg)
        for k, v in d.get("equality_terms", []):
            if not 0 <= int(k) < len(ekeys):
                raise CertificateError(f"equality closure index {k} out of range")
            cert.add_equality(ekeys[int(k)], Fraction(v))
        for k, sqs in d.get("inequality_terms", []):
            if not 0 <= int(k) < len(gkeys):
                raise CertificateError(f"inequality closure index {k} out of range")
            for item in sqs:
                if len(item) == 2 and isinstance(item[0], str):
                    cert.add_square(gkeys[int(k)], Polynomial.from_json(A.variables, item[1]), Fraction(item[0]))
                else:
                    cert.add_square(gkeys[int(k)], Polynomial.from_json(A.variables, item))
        return cert


def verify_certificate(h, A, cert):
    """(valid, residual) where residual = h - (certificate expansion), exactly."""
    cert.check_structure(A)
    if not isinstance(h, Polynomial):
        h = Polynomial.constant(A.variables, h)
    residual = h - cert.expand(A)
    return residual.is_zero(), residual


def verify_refutation(A, cert):
    return verify_certificate(Polynomial.constant(A.variables, -1), A, cert)


# ---------------------------------------------------------------------------
# proofs and composition


@dataclass
class Proof:
    """A certificate that A proves h >= 0."""
    h: Polynomial
    A: ConstraintSet
    cert: SoSCertificate
    name: str = ""

    def verify(self):
        return verify_certificate(self.h, self.A, self.cert)

    def to_json(self):
        return {"name": self.name, "variables": list(self.A.variables), "h": self.h.to_json(),
                "constraints": self.A.to_json(), "certificate": self.cert.to_json(self.A)}

    @classmethod
    def from_json(cls, d):
        A = ConstraintSet.from_json(d["constraints"])
        h = Polynomial.from_json(A.variables, d["h"])
        return cls(h, A, SoSCertificate.from_json(d["certificate"], A), d.get("name", ""))


def trivial_proof(A, i=None, square=None):
    """1 >= 0, a generator q_i >= 0, or square^2 >= 0."""
    cert = SoSCertificate(0)
    one = Polynomial.constant(A.variables, 1)
    a = [0] * len(A.inequalities)
    h = one
    if i is not None:
        a[i] = 1
        h = A.inequalities[i]
    r = one if square is None else square
    cert.add_square(a, r)
    if square is not None:
        h = h * square * square
    cert.degree = cert.required_degree(A)
    return Proof(h, A, cert)


def _merge_sets(A1, A2):
    if A1 == A2:
        return A1, list(range(len(A2.equalities))), list(range(len(A2.inequalities)))
    if A1.variables != A2.variables:
        raise ValueError("proofs over different variables")
    eqs, ineqs = list(A1.equalities), list(A1.inequalities)
    emap, gmap = [], []
    for p in A2.equalities:
        if p not in eqs:
            eqs.append(p)
        emap.append(eqs.index(p))
    for q in A2.inequalities:
        if q not in ineqs:
            ineqs.append(q)
        gmap.append(ineqs.index(q))
    return ConstraintSet(A1.variables, eqs, ineqs), emap, gmap


def _relabel(cert, A_new, emap, gmap, degree=None):
    out = SoSCertificate(cert.degree if degree is None else degree)
    for (i, mono), alpha in cert.equality_terms.items():
        out.add_equality((emap[i], mono), alpha)
    for a, sqs in cert.inequality_terms.items():
        b = [0] * len(A_new.inequalities)
        for k, v in zip(gmap, a):
            b[k] += v
        for w, r in sqs:
            out.add_square(b, r, w)
    return out


def scale(proof, c):
    c = as_rational(c)
    if c < 0:
        raise ValueError("scale must be nonnegative")
    cert = SoSCertificate(proof.cert.degree)
    for key, alpha in proof.cert.equality_terms.items():
        cert.add_equality(key, alpha * c)
    for a, sqs in proof.cert.inequality_terms.items():
        for w, r in sqs:
            cert.add_square(a, r, w * c)
    return Proof(proof.h * c, proof.A, cert, proof.name)


def compose_sum(p1, p2):
    """A |-_d p >= 0 and A' |-_d' q >= 0 give A u A' |-_max(d,d') p + q >= 0."""
    A, emap, gmap = _merge_sets(p1.A, p2.A)
    ident_e = list(range(len(p1.A.equalities)))
    ident_g = list(range(len(p1.A.inequalities)))
    deg = max(p1.cert.degree, p2.cert.degree)
    c1 = _relabel(p1.cert, A, ident_e, ident_g, deg)
    c2 = _relabel(p2.cert, A, emap, gmap, deg)
    for key, alpha in c2.equality_terms.items():
        c1.add_equality(key, alpha)
    for a, sqs in c2.inequality_terms.items():
        for w, r in sqs:
            c1.add_square(a, r, w)
    return Proof(p1.h + p2.h, A, c1)


def _eq_times(cert, Q, out):
    for (i, mono), alpha in cert.equality_terms.items():
        for e, c in Q.terms.items():
            out.add_equality((i, tuple(x + y for x, y in zip(mono, e))), alpha * c)


def compose_product(p1, p2):
    """A |-_d p >= 0 and A |-_d' q >= 0 give A |-_{d+d'} p q >= 0."""
    A, emap, gmap = _merge_sets(p1.A, p2.A)
    c1 = _relabel(p1.cert, A, list(range(len(p1.A.equalities))), list(range(len(p1.A.inequalities))))
    c2 = _relabel(p2.cert, A, emap, gmap)
    out = SoSCertificate(p1.cert.degree + p2.cert.degree)
    # p q = E1 q + (p - E1) E2 + S1 S2
    _eq_times(c1, p2.h, out)
    _eq_times(c2, p1.h - c1.equality_poly(A), out)
    for a, s1 in c1.inequality_terms.items():
        for b, s2 in c2.inequality_terms.items():
            ab = tuple(x + y for x, y in zip(a, b))
            for w1, r1 in s1:
                for w2, r2 in s2:
                    out.add_square(ab, r1 * r2, w1 * w2)
    return Proof(p1.h * p2.h, A, out)


def multiply_square(proof, r):
    """h >= 0 gives r^2 h >= 0 at degree d + 2 deg r."""
    out = SoSCertificate(proof.cert.degree + 2 * r.degree())
    _eq_times(proof.cert, r * r, out)
    for a, sqs in proof.cert.inequality_terms.items():
        for w, s in sqs:
            out.add_square(a, s * r, w)
    return Proof(proof.h * r * r, proof.A, out)


def _power(proof, k, A):
    out = trivial_proof(A)
    for _ in range(k):
        out = compose_product(out, proof)
    return out


def compose_transitive(outer, inner):
    """A |-_d {p_i >= 0} and {p_i >= 0} |-_d' q >= 0 give A |- q >= 0.

    `outer` proves q from the inequalities p_1..p_m (no equalities); `inner[i]`
    proves p_i under a common A.  Each generator product in the outer proof is
    replaced by the product of the inner proofs.
    """
    if outer.A.equalities:
        raise ValueError("outer proof must use inequalities only")
    if len(inner) != len(outer.A.inequalities):
        raise ValueError("one inner proof per outer inequality")
    A = inner[0].A if inner else outer.A
    for pr, p in zip(inner, outer.A.inequalities):
        if pr.A != A:
            raise ValueError("inner proofs must share a constraint set")
        if pr.h != p:
            raise ValueError("inner proof does not prove the outer hypothesis")
    total = None
    for a, sqs in outer.cert.inequality_terms.items():
        prod = trivial_proof(A)
        for pr, k in zip(inner, a):
            if k:
                prod = compose_product(prod, _power(pr, k, A))
        for w, r in sqs:
            term = scale(multiply_square(prod, r), w)
            total = term if total is None else compose_sum(total, term)
    if total is None:
        total = scale(trivial_proof(A), 0)
    total.cert.degree = max(total.cert.required_degree(A), 0)
    return total


def reflect(proof, name):
    """Substitute name -> -name; the generator list must be closed under the map."""
    A = proof.A
    v = Polynomial.var(A.variables, name)
    sub = {name: -v}
    idx = A.variables.index(name)
    gperm = []
    for q in A.inequalities:
        img = q.substitute(sub)
        if img not in A.inequalities:
            raise ValueError(f"generator {q} has no reflected partner")
        gperm.append(A.inequalities.index(img))
    eperm = []
    for p in A.equalities:
        img = p.substitute(sub)
        if img in A.equalities:
            eperm.append((A.equalities.index(img), 1))
        elif -img in A.equalities:
            eperm.append((A.equalities.index(-img), -1))
        else:
            raise ValueError(f"equality {p} has no reflected partner")
    out = SoSCertificate(proof.cert.degree)
    for (i, mono), alpha in proof.cert.equality_terms.items():
        j, s = eperm[i]
        out.add_equality((j, mono), alpha * s * (-1) ** mono[idx])
    for a, sqs in proof.cert.inequality_terms.items():
        b = [0] * len(a)
        for i, k in enumerate(a):
            b[gperm[i]] += k
        for w, r in sqs:
            out.add_square(b, r.substitute(sub), w)
    return Proof(proof.h.substitute(sub), A, out)


def _compositions(total, parts):
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def convex_substitution(proof, lambdas, names=None, a=-1, b=1):
    """From a <= y <= b |- p(y) >= 0 derive {a <= z_i <= b} |- p(sum lambda_i z_i) >= 0."""
    A = proof.A
    a, b = as_rational(a), as_rational(b)
    if len(A.variables) != 1 or A.equalities:
        raise ValueError("needs a one-variable interval proof")
    if A != interval_constraints(A.variables, a, b):
        raise ValueError("constraint set must be the interval generators [b - y, y - a]")
    lambdas = [as_rational(l) for l in lambdas]
    if any(l < 0 for l in lambdas) or sum(lambdas) != 1:
        raise ValueError("lambdas must be a probability vector")
    k = len(lambdas)
    names = tuple(names or [f"z{i + 1}" for i in range(k)])
    B = interval_constraints(names, a, b)
    Y = sum((l * Polynomial.var(names, z) for l, z in zip(lambdas, names)), Polynomial(names))
    sub = {A.variables[0]: Y}

    def expand(power, offset):
        # (sum_i lambda_i g_{2i+offset})^power as {tuple: coefficient}
        out = {}
        for comp in _compositions(power, k):
            coef = Fraction(factorial(power))
            for c, l in zip(comp, lambdas):
                coef = coef / factorial(c) * l ** c
            if coef:
                t = [0] * (2 * k)
                for i, c in enumerate(comp):
                    t[2 * i + offset] = c
                out[tuple(t)] = coef
        return out

    cert = SoSCertificate(proof.cert.degree)
    for (alpha_, beta_), sqs in proof.cert.inequality_terms.items():
        for t1, c1 in expand(alpha_, 0).items():
            for t2, c2 in expand(beta_, 1).items():
                t = tuple(x + y for x, y in zip(t1, t2))
                for w, r in sqs:
                    cert.add_square(t, r.substitute(sub, names), w * c1 * c2)
    return Proof(proof.h.substitute(sub, names), B, cert)


# ---------------------------------------------------------------------------
# pseudo-expectations


class MomentError(KeyError):
    pass


@dataclass
class PseudoExpectation:
    variables: tuple
    degree: int
    moments: dict

    def __post_init__(self):
        self.variables = tuple(self.variables)
        self.moments = {tuple(e): v for e, v in self.moments.items()}

    def __call__(self, poly):
        total = 0
        for e, c in poly.terms.items():
            if e not in self.moments:
                raise MomentError(f"missing moment {e}")
            m = self.moments[e]
            total = total + (c * m if isinstance(m, Fraction) else float(c) * float(m))
        return total

    @classmethod
    def from_distribution(cls, variables, d, points, weights=None):
        variables = tuple(variables)
        pts = [tuple(as_rational(x) for x in p) for p in points]
        if weights is None:
            weights = [Fraction(1, len(pts))] * len(pts)
        weights = [as_rational(w) for w in weights]
        moments = {}
        for e in monomials(len(variables), d):
            m = Fraction(0)
            for p, w in zip(pts, weights):
                t = w
                for x, k in zip(p, e):
                    if k:
                        t *= x ** k
                m += t
            moments[e] = m
        return cls(variables, d, moments)

    def to_json(self):
        return {"variables": list(self.variables), "degree": self.degree,
                "moments": [[list(e), str(v) if isinstance(v, Fraction) else float(v)]
                            for e, v in sorted(self.moments.items(), key=lambda kv: grlex_key(kv[0]))]}

    @classmethod
    def from_json(cls, d):
        mom = {}
        for e, v in d["moments"]:
            mom[tuple(e)] = Fraction(v) if isinstance(v, str) else float(v)
        return cls(tuple(d["variables"]), int(d["degree"]), mom)


@dataclass
class PEReport:
    ok: bool
    normalized: bool
    max_equality_violation: float
    min_eigenvalue: float
    worst_block: object
    blocks: list

    def to_json(self):
        return {"ok": self.ok, "normalized": self.normalized,
                "max_equality_violation": float(self.max_equality_violation),
                "min_eigenvalue": float(self.min_eigenvalue),
                "worst_block": None if self.worst_block is None else list(self.worst_block),
                "blocks": [{"generator": list(a), "min_eigenvalue": float(ev), "trace": float(tr), "ok": ok}
                           for a, ev, tr, ok in self.blocks]}


def localized_moment_matrix(pe, q, d):
    """M[u, v] = E~(u v q) over monomials with deg(u v q) <= d."""
    half = (d - q.degree()) // 2
    if half < 0:
        return np.zeros((0, 0))
    basis = monomials(len(pe.variables), half)
    M = np.empty((len(basis), len(basis)))
    for i, u in enumerate(basis):
        for j in range(i, len(basis)):
            v = basis[j]
            uv = tuple(x + y for x, y in zip(u, v))
            M[i, j] = M[j, i] = float(pe(q.shift_monomial(uv)))
    return M


def check_pseudo_expectation(pe, A, eq_tol=1e-10, psd_tol=1e-8):
    if pe.variables != A.variables:
        raise ValueError("variable lists differ")
    d = pe.degree
    need = max([p.degree() for p in A.equalities + A.inequalities], default=0)
    if d < need:
        raise ValueError(f"pseudo-expectation degree {d} below constraint degree {need}")
    for e in monomials(len(pe.variables), d):
        if e not in pe.moments:
            raise MomentError(f"missing moment {e}")
    one = pe.moments[(0,) * len(pe.variables)]
    normalized = abs(float(one) - 1.0) <= eq_tol
    viol = 0.0
    for p in closure_e(A, d):
        viol = max(viol, abs(float(pe(p))))
    keys, polys, _ = _closure_g_table(A, d)
    blocks = []
    worst, worst_key = np.inf, None
    for a, q in zip(keys, polys):
        M = localized_moment_matrix(pe, q, d)
        if M.size == 0:
            continue
        ev = min_eigenvalue(M)
        tr = float(np.trace(M))
        ok = ev >= -psd_tol * (1.0 + abs(tr))
        blocks.append((a, ev, tr, ok))
        if ev < worst:
            worst, worst_key = ev, a
    ok = normalized and viol <= eq_tol and all(b[3] for b in blocks)
    return PEReport(ok, normalized, viol, worst, worst_key, blocks)
