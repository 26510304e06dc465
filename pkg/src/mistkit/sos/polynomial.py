"""Sparse multivariate polynomials with exact rational coefficients."""
import ast
from fractions import Fraction
from itertools import combinations_with_replacement

from ..cube_fourier import as_rational


def grlex_key(exps):
    return (sum(exps), tuple(exps))


def monomials(nvars, d):
    """Exponent vectors of total degree <= d in graded lexicographic order."""
    out = []
    for deg in range(d + 1):
        level = []
        for combo in combinations_with_replacement(range(nvars), deg):
            e = [0] * nvars
            for i in combo:
                e[i] += 1
            level.append(tuple(e))
        out.extend(sorted(set(level)))
    return out


def _add_exps(a, b):
    return tuple(x + y for x, y in zip(a, b))


class Polynomial:
    __slots__ = ("variables", "terms")

    def __init__(self, variables, terms=None):
        self.variables = tuple(variables)
        clean = {}
        for e, c in (terms or {}).items():
            e = tuple(int(v) for v in e)
            if len(e) != len(self.variables) or min(e, default=0) < 0:
                raise ValueError(f"bad exponent vector {e}")
            c = as_rational(c)
            if c != 0:
                clean[e] = clean.get(e, Fraction(0)) + c
                if clean[e] == 0:
                    del clean[e]
        self.terms = clean

    # constructors
    @classmethod
    def constant(cls, variables, c):
        return cls(variables, {(0,) * len(variables): c})

    @classmethod
    def var(cls, variables, name):
        variables = tuple(variables)
        e = [0] * len(variables)
        e[variables.index(name)] = 1
        return cls(variables, {tuple(e): 1})

    @classmethod
    def monomial(cls, variables, exps, c=1):
        return cls(variables, {tuple(exps): c})

    # structure
    @property
    def nvars(self):
        return len(self.variables)

    def degree(self):
        return max((sum(e) for e in self.terms), default=0)

    def is_zero(self):
        return not self.terms

    def coeff(self, exps):
        return self.terms.get(tuple(exps), Fraction(0))

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda kv: grlex_key(kv[0]))

    def _lift(self, other):
        if isinstance(other, Polynomial):
            if other.variables != self.variables:
                raise ValueError("variable lists differ")
            return other
        return Polynomial.constant(self.variables, other)

    # arithmetic
    def __add__(self, other):
        other = self._lift(other)
        t = dict(self.terms)
        for e, c in other.terms.items():
            t[e] = t.get(e, Fraction(0)) + c
        return Polynomial(self.variables, t)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(self.variables, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        other = self._lift(other)
        t = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = _add_exps(e1, e2)
                t[e] = t.get(e, Fraction(0)) + c1 * c2
        return Polynomial(self.variables, t)

    __rmul__ = __mul__

    def __pow__(self, k):
        if k < 0:
            raise ValueError("negative power")
        out = Polynomial.constant(self.variables, 1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __eq__(self, other):
        if isinstance(other, Polynomial):
            return self.variables == other.variables and self.terms == other.terms
        return self == self._lift(other)

    def __hash__(self):
        return hash((self.variables, frozenset(self.terms.items())))

    # evaluation and substitution
    def __call__(self, *point):
        if len(point) == 1 and isinstance(point[0], (list, tuple)):
            point = point[0]
        if len(point) != self.nvars:
            raise ValueError("wrong number of coordinates")
        total = 0
        for e, c in self.terms.items():
            term = c
            for v, k in zip(point, e):
                if k:
                    term = term * v ** k
            total = total + term
        return total

    def substitute(self, mapping, variables=None):
        """Replace variables by polynomials over `variables` (default: same list)."""
        variables = tuple(variables or self.variables)
        images = []
        for name in self.variables:
            img = mapping.get(name)
            if img is None:
                img = Polynomial.var(variables, name)
            elif not isinstance(img, Polynomial):
                img = Polynomial.constant(variables, img)
            images.append(img)
        out = Polynomial(variables)
        cache = {}
        for e, c in self.terms.items():
            term = Polynomial.constant(variables, c)
            for i, k in enumerate(e):
                if k:
                    if (i, k) not in cache:
                        cache[(i, k)] = images[i] ** k
                    term = term * cache[(i, k)]
            out = out + term
        return out

    def shift_monomial(self, exps):
        return Polynomial(self.variables, {_add_exps(e, exps): c for e, c in self.terms.items()})

    # io
    def to_json(self):
        return [[list(e), str(c)] for e, c in self.sorted_terms()]

    @classmethod
    def from_json(cls, variables, data):
        if isinstance(data, str):
            return parse(data, variables)
        return cls(variables, {tuple(e): Fraction(c) for e, c in data})

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for e, c in reversed(self.sorted_terms()):
            mono = "*".join(f"{v}^{k}" if k > 1 else v for v, k in zip(self.variables, e) if k)
            if not mono:
                parts.append(str(c))
            elif c == 1:
                parts.append(mono)
            elif c == -1:
                parts.append(f"-{mono}")
            else:
                parts.append(f"({c})*{mono}")
        return " + ".join(parts).replace("+ -", "- ")


def variables_of(*names):
    """Tuple of names plus the generator polynomials."""
    names = tuple(names)
    return names, [Polynomial.var(names, n) for n in names]


_BINOPS = {ast.Add: lambda a, b: a + b, ast.Sub: lambda a, b: a - b, ast.Mult: lambda a, b: a * b}


def parse(expr, variables):
    """Polynomial from an arithmetic string such as '1/2*y^2 - y*z + 3'; '^' means power."""
    variables = tuple(variables)

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return Polynomial.constant(variables, as_rational(node.value))
        if isinstance(node, ast.Name):
            if node.id not in variables:
                raise ValueError(f"unknown variable {node.id!r}")
            return Polynomial.var(variables, node.id)
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp):
            if type(node.op) in _BINOPS:
                return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
            if isinstance(node.op, ast.Pow):
                k = ev(node.right)
                if k.degree() > 0:
                    raise ValueError("exponent must be a constant")
                k = k.coeff((0,) * len(variables))
                if k.denominator != 1 or k < 0:
                    raise ValueError("exponent must be a nonnegative integer")
                return ev(node.left) ** int(k)
            if isinstance(node.op, ast.Div):
                den = ev(node.right)
                if den.degree() > 0:
                    raise ValueError("can only divide by constants")
                c = den.coeff((0,) * len(variables))
                if c == 0:
                    raise ZeroDivisionError("division by zero")
                return ev(node.left) * Polynomial.constant(variables, 1 / c)
        raise ValueError(f"unsupported syntax in polynomial: {ast.dump(node)[:60]}")

    return ev(ast.parse(expr.replace("^", "**"), mode="eval"))
