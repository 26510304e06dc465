"""Unique Games instances, the noisy long-code reduction to Max-Cut, and exact cut values.

Labels are 0-based.  A permutation pi acts on cube points by moving coordinate i to pi[i]:
(pi x)_{pi[i]} = x_i, so a dictator on label L(v) = pi[L(u)] pulls back to a dictator on L(u).
"""
import csv
import json
import math
import warnings
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

import numpy as np

from . import cube_fourier as cf

MAX_VERTICES = 16
MAX_K = 10


@dataclass(frozen=True)
class Constraint:
    u: int
    v: int
    pi: tuple
    w: Fraction


def _check_perm(pi, k):
    if len(pi) != k or sorted(pi) != list(range(k)):
        raise ValueError(f"{pi} is not a permutation of range({k})")


def inverse(pi):
    out = [0] * len(pi)
    for i, p in enumerate(pi):
        out[p] = i
    return tuple(out)


@dataclass(frozen=True)
class UGInstance:
    n_vertices: int
    k: int
    constraints: tuple
    neighborhoods: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.k < 1 or self.n_vertices < 1:
            raise ValueError("need at least one vertex and one label")
        cons = tuple(Constraint(int(c.u), int(c.v), tuple(int(p) for p in c.pi), cf.as_rational(c.w))
                     for c in self.constraints)
        object.__setattr__(self, "constraints", cons)
        if not cons:
            raise ValueError("instance has no constraints")
        for c in cons:
            _check_perm(c.pi, self.k)
            if not (0 <= c.u < self.n_vertices and 0 <= c.v < self.n_vertices):
                raise ValueError(f"constraint {c} references a vertex outside range({self.n_vertices})")
            if c.w < 0:
                raise ValueError("negative constraint weight")
        if sum(c.w for c in cons) != 1:
            raise ValueError("constraint weights must sum to 1")
        deg = [Fraction(0)] * self.n_vertices
        nb = defaultdict(lambda: defaultdict(Fraction))
        for c in cons:
            deg[c.u] += c.w
            deg[c.v] += c.w
            nb[c.u][(c.v, c.pi)] += c.w
            nb[c.v][(c.u, inverse(c.pi))] += c.w
        if len(set(deg)) != 1 or deg[0] == 0:
            raise ValueError(f"weighted graph is not regular: degrees {[str(d) for d in deg]}")
        # E_u: (v, pi) marginal given u, so that label i at u maps to pi[i] at v
        hoods = {u: {key: w / deg[u] for key, w in nb[u].items() if w} for u in range(self.n_vertices)}
        object.__setattr__(self, "neighborhoods", hoods)

    def to_json(self):
        return {"n": self.n_vertices, "k": self.k,
                "constraints": [{"u": c.u, "v": c.v, "pi": list(c.pi), "w": str(c.w)} for c in self.constraints]}

    @classmethod
    def from_json(cls, d):
        cons = tuple(Constraint(c["u"], c["v"], tuple(c["pi"]), Fraction(str(c["w"]))) for c in d["constraints"])
        n = d.get("n", 1 + max(max(c.u, c.v) for c in cons))
        return cls(int(n), int(d["k"]), cons)


def load_instance(path):
    with open(path) as fh:
        return UGInstance.from_json(json.load(fh))


def save_instance(inst, path):
    with open(path, "w") as fh:
        json.dump(inst.to_json(), fh, indent=1)


def _check_labeling(inst, labeling):
    if len(labeling) != inst.n_vertices:
        raise ValueError("labeling must assign every vertex")
    for lab in labeling:
        if not 0 <= lab < inst.k:
            raise ValueError(f"label {lab} outside range({inst.k})")


def ug_value(inst, labeling):
    _check_labeling(inst, labeling)
    return sum((c.w for c in inst.constraints if labeling[c.v] == c.pi[labeling[c.u]]), Fraction(0))


@dataclass(frozen=True)
class RefutationValue:
    value: Fraction
    feasible: bool


def refutation_objective(inst, x):
    """E_u sum_i (E_{(v,pi) in E_u} x[v][pi(i)])^2 for simplex-relaxed tables x[v][i]."""
    x = [[cf.as_rational(t) for t in row] for row in x]
    if len(x) != inst.n_vertices or any(len(row) != inst.k for row in x):
        raise ValueError("x must be a |V| x k table")
    feasible = all(t >= 0 for row in x for t in row) and all(sum(row) <= 1 for row in x)
    if not feasible:
        warnings.warn("x violates x >= 0, sum_i x_i <= 1", stacklevel=2)
    total = Fraction(0)
    for u in range(inst.n_vertices):
        for i in range(inst.k):
            s = sum((p * x[v][pi[i]] for (v, pi), p in inst.neighborhoods[u].items()), Fraction(0))
            total += s * s
    return RefutationValue(total / inst.n_vertices, feasible)


def integral_table(inst, labeling):
    _check_labeling(inst, labeling)
    return [[Fraction(int(lab == i)) for i in range(inst.k)] for lab in labeling]


# ---------------------------------------------------------------------------
# reduction


def perm_table(pi):
    """Index map x -> pi x on {-1,1}^k in the bit convention of cube_fourier."""
    k = len(pi)
    out = []
    for x in range(1 << k):
        y = 0
        for i in range(k):
            if x >> i & 1:
                y |= 1 << pi[i]
        out.append(y)
    return tuple(out)


def _pair_probs(k, rho):
    # P(x, y) for y ~_rho x as a 2^k x 2^k table (depends only on x xor y)
    pc = cf.popcounts(k)
    agree, flip = (1 + rho) / 2, (1 - rho) / 2
    base = [agree ** (k - int(c)) * flip ** int(c) / (1 << k) for c in pc]
    return base


def _check_rho(rho):
    rho = cf.as_rational(rho)
    if abs(rho) > 1:
        raise ValueError("|rho| must be at most 1")
    if not -1 < rho < 0:
        warnings.warn(f"rho = {rho} is outside the Max-Cut regime (-1, 0)", stacklevel=3)
    return rho


def _check_exact(inst):
    if inst.n_vertices > MAX_VERTICES or inst.k > MAX_K:
        raise cf.ResourceError(f"exact reduction limited to |V| <= {MAX_VERTICES}, k <= {MAX_K}")


@dataclass(frozen=True)
class MaxCutInstance:
    """Weighted undirected edges over V x {-1,1}^k; a vertex is (v, cube index)."""
    n_vertices: int
    k: int
    rho: Fraction
    edges: dict

    def total_weight(self):
        return sum(self.edges.values(), Fraction(0))

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["v1", "x1", "v2", "x2", "weight"])
            for ((v1, x1), (v2, x2)), wt in sorted(self.edges.items()):
                w.writerow([v1, signs(x1, self.k), v2, signs(x2, self.k), str(wt)])


def signs(index, k):
    return "".join("-" if index >> i & 1 else "+" for i in range(k))


def read_edges_csv(path):
    def idx(s):
        return sum(1 << i for i, ch in enumerate(s) if ch == "-")
    out = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            key = ((int(row["v1"]), idx(row["x1"])), (int(row["v2"]), idx(row["x2"])))
            out[key] = Fraction(row["weight"])
    return out


def kkmo_exact(inst, rho):
    rho = _check_rho(rho)
    _check_exact(inst)
    k = inst.k
    P = _pair_probs(k, rho)
    tables = {}
    edges = defaultdict(Fraction)
    pu = Fraction(1, inst.n_vertices)
    for u in range(inst.n_vertices):
        hood = list(inst.neighborhoods[u].items())
        for (v1, pi1), p1 in hood:
            t1 = tables.setdefault(pi1, perm_table(pi1))
            for (v2, pi2), p2 in hood:
                t2 = tables.setdefault(pi2, perm_table(pi2))
                w = pu * p1 * p2
                for x in range(1 << k):
                    a = (v1, t1[x])
                    for y in range(1 << k):
                        b = (v2, t2[y])
                        edges[(a, b) if a <= b else (b, a)] += w * P[x ^ y]
    return MaxCutInstance(inst.n_vertices, k, rho, dict(edges))


def kkmo_sampler(inst, rho, seed=0):
    """Endless generator of sampled edges ((v1, x1), (v2, x2))."""
    rho = float(_check_rho(rho))
    rng = np.random.Generator(np.random.Philox(seed))
    k = inst.k
    hoods = []
    for u in range(inst.n_vertices):
        items = list(inst.neighborhoods[u].items())
        hoods.append(([key for key, _ in items], np.array([float(p) for _, p in items])))
    while True:
        u = int(rng.integers(inst.n_vertices))
        keys, ps = hoods[u]
        (v1, pi1), (v2, pi2) = (keys[j] for j in rng.choice(len(keys), size=2, p=ps / ps.sum()))
        x = int(rng.integers(1 << k))
        noise = rng.random(k) < (1 - rho) / 2
        y = x ^ sum(1 << i for i in range(k) if noise[i])
        yield (v1, perm_table(pi1)[x]), (v2, perm_table(pi2)[y])


def kkmo_reduce(inst, rho, mode="exact", seed=0):
    if mode == "exact":
        return kkmo_exact(inst, rho)
    if mode == "sampler":
        return kkmo_sampler(inst, rho, seed)
    raise ValueError("mode must be 'exact' or 'sampler'")


# ---------------------------------------------------------------------------
# cuts


@dataclass(frozen=True)
class CutAssignment:
    tables: tuple   # BooleanFunction on k bits per UG vertex, values in [0, 1]

    def __post_init__(self):
        ks = {f.n for f in self.tables}
        if len(ks) != 1:
            raise ValueError("all cut tables must have the same arity")
        if any(f.range_tag != cf.UNIT for f in self.tables):
            raise ValueError("cut tables must be unit_interval functions")

    @property
    def k(self):
        return self.tables[0].n

    def to_json(self):
        return {"tables": [[str(v) for v in f.values] for f in self.tables]}

    @classmethod
    def from_json(cls, d):
        return cls(tuple(cf.BooleanFunction(int(math.log2(len(t))), tuple(Fraction(v) for v in t), cf.UNIT)
                         for t in d["tables"]))


def dictator_cut(inst, labeling):
    _check_labeling(inst, labeling)
    return CutAssignment(tuple(cf.dictator(inst.k, lab + 1) for lab in labeling))


def constant_cut(inst, c=Fraction(1, 2)):
    return CutAssignment(tuple(cf.constant(inst.k, c) for _ in range(inst.n_vertices)))


def random_cut(inst, seed=0, bits=3):
    return CutAssignment(tuple(cf.random_dyadic(inst.k, bits, seed * 1009 + v) for v in range(inst.n_vertices)))


def _check_cut(inst, cut):
    if len(cut.tables) != inst.n_vertices or cut.k != inst.k:
        raise ValueError("cut must give one k-bit table per vertex")


def cut_value_edges(mc, cut):
    """E over edges of f(e1)(1 - f(e2)) + f(e2)(1 - f(e1))."""
    total = Fraction(0)
    for ((v1, x1), (v2, x2)), w in mc.edges.items():
        a, b = cut.tables[v1].values[x1], cut.tables[v2].values[x2]
        total += w * (a + b - 2 * a * b)
    return total


def averaged_tables(inst, cut):
    """g_u(x) = E_{(v,pi) in E_u} f_v(pi x) for every u."""
    out = []
    for u in range(inst.n_vertices):
        vals = [Fraction(0)] * (1 << inst.k)
        for (v, pi), p in inst.neighborhoods[u].items():
            t = perm_table(pi)
            fv = cut.tables[v].values
            for x in range(1 << inst.k):
                vals[x] += p * fv[t[x]]
        out.append(cf.BooleanFunction(inst.k, tuple(vals), cf.UNIT))
    return out


def cut_value_stability(inst, rho, cut):
    rho = cf.as_rational(rho)
    gs = averaged_tables(inst, cut)
    return 1 - sum((cf.stab_two_sided(g.fourier, rho) for g in gs), Fraction(0)) / inst.n_vertices


@dataclass(frozen=True)
class CutValue:
    direct: Fraction
    via_stability: Fraction

    @property
    def agree(self):
        return self.direct == self.via_stability


def cut_value(inst, rho, cut):
    _check_cut(inst, cut)
    mc = kkmo_exact(inst, rho)
    out = CutValue(cut_value_edges(mc, cut), cut_value_stability(inst, rho, cut))
    if not out.agree:
        raise AssertionError(f"cut values disagree: {out.direct} vs {out.via_stability}")
    return out


# ---------------------------------------------------------------------------
# bounds


def k_rho(rho):
    rho = float(rho)
    if abs(rho) > 1:
        raise ValueError("|rho| must be at most 1")
    return 0.5 + rho / math.pi + (0.5 - 1 / math.pi) * rho ** 3


def bounds_report(rho, grid=np.linspace(-0.99, -0.01, 99)):
    rho = float(rho)
    if abs(rho) > 1:
        raise ValueError("|rho| must be at most 1")

    def triple(r):
        return math.acos(r) / math.pi, 1 - k_rho(r), (1 - r) / 2

    target, oz, sdp = triple(rho)
    ordered = all(a <= b + 1e-15 and b <= c + 1e-15 for a, b, c in map(triple, grid))
    return {"rho": rho, "sdp_like": sdp, "oz_bound": oz, "target": target, "K": k_rho(rho),
            "ordered_here": target <= oz <= sdp if -1 < rho < 0 else None,
            "ordered_on_grid": ordered}


# ---------------------------------------------------------------------------
# toy instances


def _circulant(n, shifts):
    pairs = []
    for s in shifts:
        for i in range(n):
            pairs.append((i, (i + s) % n))
    return pairs


def _perm_mapping(rng, k, a, b):
    # uniform permutation with pi[a] = b
    rest = [i for i in range(k) if i != a]
    img = [j for j in range(k) if j != b]
    rng.shuffle(img)
    pi = [0] * k
    pi[a] = b
    for i, j in zip(rest, img):
        pi[i] = j
    return tuple(pi)


def toy_generators(kind, n=4, k=3, seed=0, shifts=(1,), shift=1):
    """Regular toy instances on a circulant graph.  Returns (instance, hidden labeling or None)."""
    rng = np.random.default_rng(seed)
    pairs = _circulant(n, shifts)
    w = Fraction(1, len(pairs))
    hidden = None
    if kind == "perfect":
        hidden = tuple(int(v) for v in rng.integers(k, size=n))
        cons = []
        for u, v in pairs:
            if u == v:
                pi = tuple(range(k)) if k == 1 else _perm_mapping(rng, k, hidden[u], hidden[u])
            else:
                pi = _perm_mapping(rng, k, hidden[u], hidden[v])
            cons.append(Constraint(u, v, pi, w))
    elif kind == "cycle-shift":
        cons = [Constraint(u, v, tuple((i + shift) % k for i in range(k)), w) for u, v in pairs]
    elif kind == "random":
        cons = [Constraint(u, v, tuple(int(p) for p in rng.permutation(k)), w) for u, v in pairs]
    else:
        raise ValueError(f"unknown kind {kind!r}; use perfect, cycle-shift or random")
    return UGInstance(n, k, tuple(cons)), hidden


def best_labeling(inst):
    """Exhaustive UG optimum (k^|V| labelings)."""
    if inst.k ** inst.n_vertices > 1 << 20:
        raise cf.ResourceError("too many labelings to enumerate")
    best, arg = Fraction(-1), None
    for lab in product(range(inst.k), repeat=inst.n_vertices):
        val = ug_value(inst, lab)
        if val > best:
            best, arg = val, lab
    return best, arg
