"""The acceptance battery: one function per criterion, each returning a CriterionResult."""
import math
import random
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import bernstein_approx as ba
from . import cube_fourier as cf
from . import delta_functionals as dl
from . import gaussian_j as gj
from . import tensorization as tz
from . import ug_maxcut as ug
from .sos import lemmas
from .sos.library import all_library_proofs
from .sos.polynomial import Polynomial
from .sos.proofs import (PseudoExpectation, check_pseudo_expectation,
                         interval_constraints, unconstrained, verify_certificate)
from .sos.search import search_certificate

FD_STEP = 5e-4
FD_REL = 1e-6
# relative error is measured against max(|exact|, floor * sup|exact| over the grid)
FD_FLOOR = 1e-3


@dataclass
class CriterionResult:
    number: int
    name: str
    ok: bool
    seconds: float = 0.0
    details: dict = field(default_factory=dict)

    def line(self):
        return f"criterion {self.number:2d} [{'PASS' if self.ok else 'FAIL'}] {self.name} ({self.seconds:.1f}s)"

    def to_json(self):
        return {"criterion": self.number, "name": self.name, "ok": bool(self.ok),
                "seconds": round(self.seconds, 3), "details": self.details}


def _timed(number, name, fn):
    t = time.perf_counter()
    ok, details = fn()
    return CriterionResult(number, name, bool(ok), time.perf_counter() - t, details)


# ---------------------------------------------------------------------------


def sheppard():
    cf.majority_stability_dp(3, 0.5)   # compile outside the timed region
    t = time.perf_counter()
    vals = {n: cf.majority_stability_dp(n, 0.5) for n in (3, 11, 31, 101)}
    elapsed = time.perf_counter() - t
    dist = [abs(v - 2 / 3) for v in vals.values()]
    monotone = all(a > b for a, b in zip(dist, dist[1:]))
    ok = monotone and dist[-1] <= 0.02 and elapsed < 1.0
    return ok, {"values": vals, "distance_to_2/3": dist, "monotone": monotone, "elapsed": elapsed}


def _rel_ok(exact, approx, scale):
    den = np.maximum(np.abs(exact), FD_FLOOR * scale)
    err = np.abs(exact - approx) / den
    return float(err.max())


def j_derivative_suite():
    z = np.round(np.arange(0.1, 0.9 + 1e-9, 0.05), 10)
    X, Y = np.meshgrid(z, z, indexing="ij")
    h = FD_STEP
    worst = {}
    det_worst = 0.0
    drho_ok = True
    for rho in (-0.7, -0.3, 0.3, 0.7):
        D = gj.j_derivatives(rho, X, Y)
        Dxp, Dxm = gj.j_derivatives(rho, X + h, Y), gj.j_derivatives(rho, X - h, Y)
        Dyp, Dym = gj.j_derivatives(rho, X, Y + h), gj.j_derivatives(rho, X, Y - h)
        Dxp2, Dxm2 = gj.j_derivatives(rho, X + 2 * h, Y), gj.j_derivatives(rho, X - 2 * h, Y)
        Dyp2, Dym2 = gj.j_derivatives(rho, X, Y + 2 * h), gj.j_derivatives(rho, X, Y - 2 * h)
        # each closed-form partial against the 5-point central difference of the order below it
        pairs = {"Jx": ("J", "x"), "Jy": ("J", "y"), "Jxx": ("Jx", "x"), "Jxy": ("Jx", "y"),
                 "Jyy": ("Jy", "y"), "Jxxx": ("Jxx", "x"), "Jxxy": ("Jxx", "y"),
                 "Jxyy": ("Jxy", "y"), "Jyyy": ("Jyy", "y")}
        for key, (base, axis) in pairs.items():
            P, M = (Dxp, Dxm) if axis == "x" else (Dyp, Dym)
            P2, M2 = (Dxp2, Dxm2) if axis == "x" else (Dyp2, Dym2)
            fd = (8 * (P[base] - M[base]) - (P2[base] - M2[base])) / (12 * h)
            e = _rel_ok(D[key], fd, float(np.abs(D[key]).max()))
            worst[key] = max(worst.get(key, 0.0), e)
        r = gj.JEvaluator(rho)
        hr = 1e-5
        fd_rho = (gj.j_array(rho + hr, X, Y) - gj.j_array(rho - hr, X, Y)) / (2 * hr)
        worst["Jrho"] = max(worst.get("Jrho", 0.0), _rel_ok(D["Jrho"], fd_rho, float(D["Jrho"].max())))
        lhs = D["Jxx"] * D["Jyy"]
        rhs = rho * rho * D["Jxy"] ** 2
        det_worst = max(det_worst, float(np.max(np.abs(lhs - rhs) / np.abs(rhs))))
        drho_ok &= bool(np.all(np.abs(D["Jrho"]) <= (1 - r.rho ** 2) ** -1.5))
    ok = max(worst.values()) <= FD_REL and det_worst <= 1e-8 and drho_ok
    return ok, {"fd_relative_error": worst, "determinant_relative_error": det_worst, "drho_bound": drho_ok,
                "step": FD_STEP, "relative_floor": FD_FLOOR}


def m_definiteness():
    z = np.round(np.arange(0.1, 0.9 + 1e-9, 0.05), 10)
    bad = []
    count = 0
    for rho in (0.3, 0.5, 0.7, -0.3, -0.5, -0.7):
        want = "NSD" if rho > 0 else "PSD"
        for sigma in np.linspace(0.0, rho, 6):
            for x in z:
                for y in z:
                    cls = gj.m_definiteness(gj.m_matrix(rho, float(sigma), float(x), float(y)))
                    count += 1
                    if want not in cls:
                        bad.append((rho, float(sigma), float(x), float(y), cls))
    return not bad, {"points": count, "failures": bad[:5]}


def _corpus_n(n, seed):
    rng = random.Random(seed)
    fs = [cf.random_dyadic(n, rng.randint(1, 5), seed * 1000 + j, signed=rng.random() < 0.5) for j in range(200)]
    fs.append(cf.dictator(n, 1 + rng.randrange(n)))
    fs.append(cf.parity(n, range(1, n + 1)))
    if n % 2:
        fs.append(cf.majority(n))
    return fs


def delta_identity():
    bad = []
    total = 0
    for n in range(1, 9):
        for f in _corpus_n(n, n):
            total += 1
            dr, dfo = dl.delta_recursive(f), dl.delta_fourier(f)
            if dr != dfo or not dr <= dl.flip_bound(f) or not dl.variance_identity(f):
                bad.append({"n": n, "values": [str(v) for v in f.values]})
    return not bad, {"functions": total, "failures": bad[:3]}


def hyper_delta():
    bad = []
    worst = math.inf
    for j in range(500):
        f = cf.random_dyadic(8, 4, 50_000 + j, signed=True)
        for sigma in (Fraction(3, 4), Fraction(9, 10)):
            lhs, rhs, ok = dl.delta_hyper_bound(f, sigma)
            worst = min(worst, rhs - float(lhs))
            if not float(lhs) <= rhs + 1e-12:
                bad.append((j, str(sigma)))
    return not bad, {"cases": 1000, "min_slack": worst, "failures": bad[:5]}


def _tensor_corpus(n, eps, eta):
    fs = [cf.dictator(n, 1), cf.parity(n, range(1, n + 1)), cf.random_dyadic(n, 3, 7 * n),
          cf.random_dyadic(n, 3, 7 * n + 1)]
    if n % 2:
        fs.append(cf.majority(n))
    out = []
    for f in fs:
        if f.range_tag == cf.SIGNED:
            f = cf.BooleanFunction(n, tuple((1 + v) / 2 for v in f.values), cf.UNIT)
        out.append(cf.smooth(f, eps, eta))
    return out


def base_and_tensor(trials=10_000):
    base = {}
    ok = True
    for rho in (0.3, 0.5, 0.7):
        for eps in (0.05, 0.1, 0.2):
            rep = tz.base_case_sweep(rho, eps, trials=trials, seed=int(100 * rho + 1000 * eps))
            base[f"{rho},{eps}"] = {"passed": rep.extra["passed"], "C": rep.constant_used["C"],
                                   "min_margin": rep.extra["min_margin"]}
            ok &= rep.ok
    eps, eta = Fraction(1, 10), Fraction(1, 10)
    checked, failed = 0, []
    for rho in (0.3, 0.5):
        for n in range(1, 7):
            corpus = _tensor_corpus(n, eps, eta)
            for i, f in enumerate(corpus):
                for j, g in enumerate(corpus):
                    rep = tz.check_tensorization(f, g, rho, eps=float(eps) / 2)
                    checked += 1
                    if not rep.ok:
                        failed.append({"rho": rho, "n": n, "pair": (i, j), "margin": rep.margin})
    return ok and not failed, {"base_case": base, "tensor_pairs": checked, "tensor_failures": failed[:5]}


def mist_trend():
    table = tz.mist_gap_table(0.5, range(5, 16, 2))
    gaps = [g for _, g in table]
    positive = all(g > 0 for g in gaps)
    decreasing = all(a > b for a, b in zip(gaps, gaps[1:]))
    dict_rep = tz.check_mist(cf.dictator(5, 1), 0.5)
    dict_gap = dict_rep.witness["gap"]
    ok = positive and decreasing and gaps[-1] < 0.06 and dict_gap >= 0.04
    return ok, {"gaps": table, "dictator_gap": dict_gap}


def bernstein():
    t = time.perf_counter()
    jt = ba.approximate_j(0.5, 0.1, 0.01)
    elapsed = time.perf_counter() - t
    ratios = ba.ladder_ratios(jt.ladder)[-3:]
    err = jt.ladder[-1]["error"]
    ok = err <= 0.01 and len(ratios) == 3 and all(r <= 0.75 for _, r in ratios) and elapsed < 120
    return ok, {"n": jt.n, "error": err, "ratios": ratios, "ladder": [(r["n"], r["error"]) for r in jt.ladder],
                "elapsed": elapsed}


def perturb(proof, rng):
    """Copy of the certificate with one coefficient of one square changed (or a square added)."""
    out = proof.cert.copy()
    delta = Fraction(rng.choice((-1, 1)), 2 ** rng.randint(1, 8))
    keys = [k for k, sq in out.inequality_terms.items() if sq]
    if not keys:
        # empty certificate for 0 >= 0: any added square breaks it
        out.add_square((0,) * len(proof.A.inequalities), Polynomial.constant(proof.A.variables, delta))
        return out
    key = keys[rng.randrange(len(keys))]
    squares = list(out.inequality_terms[key])
    j = rng.randrange(len(squares))
    w, r = squares[j]
    mono = rng.choice(sorted(r.terms))
    squares[j] = (w, r + Polynomial.monomial(r.variables, mono, delta))
    out.inequality_terms[key] = squares
    return out


def sos_certificates(perturbations=100, seed=0):
    proofs = all_library_proofs()
    verified = [(fid, params) for fid, params, p in proofs if p.verify()[0]]
    rng = random.Random(seed)
    survived = []
    for t in range(perturbations):
        fid, params, p = proofs[rng.randrange(len(proofs))]
        bad = perturb(p, rng)
        if verify_certificate(p.h, p.A, bad)[0]:
            survived.append((fid, params, t))
    A = interval_constraints(("y",))
    y = Polynomial.var(("y",), "y")
    found = None
    for d in (4, 5):
        res = search_certificate(y * y - y ** 4, A, d)
        if res.status == "found":
            found = (d, verify_certificate(y * y - y ** 4, A, res.certificate)[0])
            break
    B = unconstrained(("y",))
    wit = search_certificate(1 + y, B, 2)
    witness_ok = wit.status == "infeasible" and wit.pe is not None and float(wit.pe(1 + y)) < 0
    ok = (len(verified) == len(proofs) and not survived and found is not None and found[1] and witness_ok)
    return ok, {"library": len(proofs), "verified": len(verified), "perturbations": perturbations,
                "perturbations_surviving": survived, "search_degree": found and found[0],
                "pe_witness": wit.pe.to_json() if wit.pe else None,
                "pe_value": float(wit.pe(1 + y)) if wit.pe else None}


def cube_distribution(n, seed):
    points = [tuple(-1 if x >> i & 1 else 1 for i in range(n)) for x in range(1 << n)]
    if seed is None:
        return points, None
    rng = random.Random(seed)
    w = [rng.randint(1, 9) for _ in points]
    return points, [Fraction(v, sum(w)) for v in w]


def realizable_on_cube(pe):
    """True when the table is exactly the moment table of a distribution on {-1,1}^n."""
    n = len(pe.variables)
    reduced = {}
    for e, v in pe.moments.items():
        S = sum(1 << i for i, k in enumerate(e) if k % 2)
        if reduced.setdefault(S, v) != v:
            return False
    if len(reduced) < 1 << n:
        return False
    pc = cf.popcounts(n)
    for x in range(1 << n):
        if sum((-m if pc[S & x] % 2 else m) for S, m in reduced.items()) < 0:
            return False
    return True


def pseudo_expectations():
    passed, caught, total, realizable, weak = 0, 0, 0, 0, []
    for n in (1, 2, 3):
        names = tuple(f"x{i}" for i in range(1, n + 1))
        A = interval_constraints(names)
        for seed in (None, 1, 2):
            pts, w = cube_distribution(n, seed)
            pe = PseudoExpectation.from_distribution(names, 4, pts, w)
            total += 1
            passed += check_pseudo_expectation(pe, A).ok
            for mono in pe.moments:
                if not any(mono):
                    continue
                for step in (Fraction(1, 2), Fraction(-1, 2)):
                    mom = dict(pe.moments)
                    mom[mono] += step
                    bad = PseudoExpectation(names, 4, mom)
                    rep = check_pseudo_expectation(bad, A)
                    if not rep.ok and rep.min_eigenvalue < -1e-6:
                        caught += 1
                    elif realizable_on_cube(bad):
                        realizable += 1
                    else:
                        weak.append((n, seed, mono, str(step), rep.min_eigenvalue))
    return passed == total and not weak, {"true_tables": total, "true_passed": passed,
                                          "corrupted_caught": caught,
                                          "corrupted_but_realizable": realizable,
                                          "corruptions_not_caught": weak[:5]}


def taylor_lemma(samples=10_000, nu_rungs=(16, 32, 64)):
    jt = ba.approximate_j(-0.5, 0.1, 0.01)
    rep = lemmas.taylor_lemma_numeric(jt, 0.1, -0.5, samples=samples)
    nu = {n: lemmas.nu_identity_check(jt.rung_poly(n), Fraction(-1, 2), samples=2 if n < 64 else 1)["ok"]
          for n in nu_rungs}
    split = {}
    for eta in (Fraction(1, 5), Fraction(3, 10)):
        for seed in (1, 2):
            r = lemmas.high_low_split_checks(cf.random_dyadic(8, 4, seed), Fraction(1, 10), eta, seed=seed)
            split[f"{eta},seed={seed}"] = r["ok"]
    ok = rep["ok"] and all(nu.values()) and all(split.values())
    return ok, {"taylor": {k: v for k, v in rep.items() if k != "witness"}, "nu_identity": nu, "split": split}


def reduction(instances=50):
    rng = random.Random(0)
    mismatch = []
    for s in range(instances):
        n, k = rng.randint(1, 8), rng.randint(1, 4)
        kind = rng.choice(("perfect", "random", "cycle-shift"))
        inst, _ = ug.toy_generators(kind, n, k, seed=s, shifts=(1,) if n < 3 else tuple(rng.sample((1, 2), rng.randint(1, 2))))
        rho = rng.choice((Fraction(-3, 10), Fraction(-3, 5)))
        cut = ug.random_cut(inst, seed=s)
        mc = ug.kkmo_exact(inst, rho)
        a, b = ug.cut_value_edges(mc, cut), ug.cut_value_stability(inst, rho, cut)
        if a != b:
            mismatch.append((s, str(a), str(b)))
    dictator = []
    for s, rho in enumerate((Fraction(-3, 10), Fraction(-3, 5))):
        inst, hidden = ug.toy_generators("perfect", 5, 3, seed=s, shifts=(1, 2))
        cv = ug.cut_value(inst, rho, ug.dictator_cut(inst, hidden))
        dictator.append(cv.direct == (1 - rho) / 2 and cv.agree)
    order = [ug.bounds_report(-r / 10) for r in range(1, 10)]
    ordered = all(r["ordered_here"] for r in order)
    ok = not mismatch and all(dictator) and ordered
    return ok, {"instances": instances, "mismatches": mismatch, "dictator_exact": dictator,
                "bounds": [(r["rho"], r["target"], r["oz_bound"], r["sdp_like"]) for r in order]}


CRITERIA = {
    1: ("Sheppard convergence of majority stability", sheppard),
    2: ("J closed-form derivatives", j_derivative_suite),
    3: ("M matrix definiteness", m_definiteness),
    4: ("Delta identity, flip bound, variance identity", delta_identity),
    5: ("hypercontractive Delta bound", hyper_delta),
    6: ("base case and tensorization", base_and_tensor),
    7: ("majority is stablest trend", mist_trend),
    8: ("Bernstein approximation of J", bernstein),
    9: ("SoS certificates and search", sos_certificates),
    10: ("pseudo-expectation checks", pseudo_expectations),
    11: ("Taylor lemma, nu identity, high/low split", taylor_lemma),
    12: ("Max-Cut reduction and bounds", reduction),
}


def run(number):
    name, fn = CRITERIA[number]
    return _timed(number, name, fn)


def run_all(numbers=None):
    return [run(k) for k in (numbers or sorted(CRITERIA))]
