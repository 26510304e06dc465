"""Certificate search: Gram-matrix SDP, then exact rational rounding.

The SDP maximises lambda subject to
    h - lambda = sum_q <G_q, m_q m_q^T> q + sum_e alpha_e e + sum_mu s_mu (+-mu),
with an L1 penalty on the slacks s_mu.  Its dual is min E~(h) over degree-d
pseudo-expectations with |E~(mu)| <= 2^deg(mu), so the dual is always bounded
and an infeasible instance yields a pseudo-expectation witness.

Rounding performs facial reduction: numerically null directions of every Gram
block are rationalised and projected out, the reduced Gram matrices are
rounded to dyadic rationals, the residual is removed by an exact least-norm
projection onto the coefficient equations, and positivity is checked by an
exact LDL^T factorisation.  Nothing is accepted without verify_certificate.
"""
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ..cube_fourier import ResourceError
from .polynomial import Polynomial, monomials
from .proofs import (ConstraintSet, Proof, PseudoExpectation, SoSCertificate, _closure_e_table,
                     _closure_g_table, check_pseudo_expectation, verify_certificate)
from .sdp import SDPProblem, solve

MAX_BLOCK_DIM = 300
INFEASIBLE_TOL = 1e-6
DYADIC_LADDER = (12, 16, 20, 24, 28, 32, 36, 40)
NULL_TOLS = (1e-7, 1e-5, 1e-3)


@dataclass
class SearchResult:
    status: str                  # "found", "infeasible", "indeterminate"
    certificate: SoSCertificate = None
    proof: Proof = None
    pe: PseudoExpectation = None
    pe_report: object = None
    value: float = None          # SDP estimate of min E~(h)
    iterations: int = 0
    detail: str = ""

    def to_json(self):
        out = {"status": self.status, "value": self.value, "iterations": self.iterations, "detail": self.detail}
        if self.proof is not None:
            out["proof"] = self.proof.to_json()
        if self.pe is not None:
            out["pe"] = self.pe.to_json()
            out["pe_report"] = self.pe_report.to_json() if self.pe_report is not None else None
        return out


@dataclass
class _Layout:
    mons: list
    midx: dict
    gkeys: list
    gpolys: list
    bases: list
    ekeys: list
    epolys: list


def _layout(h, A, d):
    n = len(A.variables)
    mons = monomials(n, d)
    midx = {e: i for i, e in enumerate(mons)}
    gkeys, gpolys, _ = _closure_g_table(A, d)
    keep = [(k, q) for k, q in zip(gkeys, gpolys) if q.degree() <= d]
    bases = [monomials(n, (d - q.degree()) // 2) for _, q in keep]
    ekeys, epolys, _ = _closure_e_table(A, d)
    return _Layout(mons, midx, [k for k, _ in keep], [q for _, q in keep], bases, ekeys, epolys)


def _coeff_vector(p, lay):
    v = np.zeros(len(lay.mons))
    for e, c in p.terms.items():
        v[lay.midx[e]] += float(c)
    return v


def build_sdp(h, A, d):
    lay = _layout(h, A, d)
    total = sum(len(b) for b in lay.bases)
    if total > MAX_BLOCK_DIM:
        raise ResourceError(f"total block dimension {total} exceeds {MAX_BLOCK_DIM}")
    m = len(lay.mons)
    blocks, Cs = [], []
    for q, basis in zip(lay.gpolys, lay.bases):
        k = len(basis)
        Ak = np.zeros((m, k, k))
        for a, u in enumerate(basis):
            for b_, v in enumerate(basis):
                uv = tuple(x + y for x, y in zip(u, v))
                for e, c in q.terms.items():
                    Ak[lay.midx[tuple(x + y for x, y in zip(e, uv))], a, b_] += float(c)
        blocks.append(Ak)
        Cs.append(np.zeros((k, k)))
    cols, cost = [], []
    for p in lay.epolys:
        v = _coeff_vector(p, lay)
        cols += [v, -v]
        cost += [0.0, 0.0]
    e0 = np.zeros(m)
    e0[0] = 1.0
    cols += [e0, -e0]
    cost += [-1.0, 1.0]
    for i, mu in enumerate(lay.mons[1:], start=1):
        v = np.zeros(m)
        v[i] = 1.0
        bound = 2.0 ** sum(mu)
        cols += [v, -v]
        cost += [bound, bound]
    A_lp = np.array(cols).T
    b = _coeff_vector(h, lay)
    pairs = tuple((2 * i, 2 * i + 1) for i in range(len(lay.epolys) + 1))
    return SDPProblem(blocks, Cs, A_lp, np.array(cost), b, pairs), lay


# ---------------------------------------------------------------------------
# exact linear algebra


def _rref(rows, ncols):
    """Reduced row echelon form over the rationals; returns (rows, pivot columns)."""
    R = [list(r) for r in rows]
    pivots = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(R)) if R[i][c] != 0), None)
        if piv is None:
            continue
        R[r], R[piv] = R[piv], R[r]
        inv = 1 / R[r][c]
        R[r] = [v * inv for v in R[r]]
        for i in range(len(R)):
            if i != r and R[i][c] != 0:
                f = R[i][c]
                R[i] = [a - f * b for a, b in zip(R[i], R[r])]
        pivots.append(c)
        r += 1
        if r == len(R):
            break
    return R[:r], pivots


def _nullspace(rows, ncols):
    R, piv = _rref(rows, ncols)
    free = [c for c in range(ncols) if c not in piv]
    basis = []
    for f in free:
        v = [Fraction(0)] * ncols
        v[f] = Fraction(1)
        for row, p in zip(R, piv):
            v[p] = -row[f]
        basis.append(v)
    return basis


def _float_rref(M, tol=1e-9):
    M = np.array(M, dtype=float)
    r = 0
    rows, cols = M.shape
    for c in range(cols):
        if r == rows:
            break
        piv = r + int(np.argmax(np.abs(M[r:, c])))
        if abs(M[piv, c]) <= tol:
            continue
        M[[r, piv]] = M[[piv, r]]
        M[r] /= M[r, c]
        for i in range(rows):
            if i != r:
                M[i] -= M[i, c] * M[r]
        r += 1
    return M[:r]


def ldl_psd(H):
    """Exact LDL^T of a symmetric rational matrix; None unless PSD."""
    n = len(H)
    L = [[Fraction(0)] * n for _ in range(n)]
    D = [Fraction(0)] * n
    for j in range(n):
        dj = H[j][j] - sum(L[j][k] ** 2 * D[k] for k in range(j))
        if dj < 0:
            return None
        D[j] = dj
        L[j][j] = Fraction(1)
        for i in range(j + 1, n):
            v = H[i][j] - sum(L[i][k] * L[j][k] * D[k] for k in range(j))
            if dj == 0:
                if v != 0:
                    return None
                L[i][j] = Fraction(0)
            else:
                L[i][j] = v / dj
    return L, D


def _dyadic(v, k):
    return Fraction(round(float(v) * 2 ** k), 2 ** k)


# ---------------------------------------------------------------------------
# rounding


def _reduce_block(Xk, null_tol, max_den=1024):
    """Rational basis B (columns) of the numerical range complement of null(Xk)."""
    n = Xk.shape[0]
    w, V = np.linalg.eigh(Xk)
    scale = max(1.0, float(np.max(np.abs(w))))
    null = V[:, w < null_tol * scale]
    ident = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    if null.shape[1] == 0:
        return ident
    if null.shape[1] == n:
        return []
    R = _float_rref(null.T)
    Rq = [[Fraction(v).limit_denominator(max_den) for v in row] for row in R]
    if np.max(np.abs(np.array([[float(v) for v in row] for row in Rq]) - R)) > 1e-6:
        return ident
    basis = _nullspace(Rq, n)
    return [[basis[c][a] for c in range(len(basis))] for a in range(n)]


def _round_attempt(h, A, d, lay, res, null_tol, k, use_lambda):
    variables = A.variables
    one = Polynomial.constant(variables, 1)
    unknowns = []      # (kind, data)
    x0 = []
    columns = []       # polynomial per unknown
    block_info = []
    for bi, (q, basis, Xk) in enumerate(zip(lay.gpolys, lay.bases, res.X)):
        B = _reduce_block(Xk, null_tol)
        r = len(B[0]) if B else 0
        if r == 0:
            block_info.append(None)
            continue
        mono_polys = [Polynomial.monomial(variables, u) for u in basis]
        pc = []
        for c in range(r):
            p = Polynomial(variables)
            for a in range(len(basis)):
                if B[a][c] != 0:
                    p = p + B[a][c] * mono_polys[a]
            pc.append(p)
        Bf = np.array([[float(v) for v in row] for row in B])
        Bp = np.linalg.pinv(Bf)
        H0 = Bp @ Xk @ Bp.T
        pos = {}
        for c in range(r):
            for e in range(c, r):
                pos[(c, e)] = len(unknowns)
                unknowns.append(("H", bi, c, e))
                x0.append(_dyadic(H0[c, e], k))
                poly = pc[c] * pc[e] * q
                columns.append(poly if c == e else 2 * poly)
        block_info.append((pc, pos, r))
    n_eq = len(lay.epolys)
    alpha = res.x[0:2 * n_eq:2] - res.x[1:2 * n_eq:2]
    for i, p in enumerate(lay.epolys):
        unknowns.append(("alpha", i))
        x0.append(_dyadic(alpha[i], k))
        columns.append(p)
    lam = res.x[2 * n_eq] - res.x[2 * n_eq + 1]
    if use_lambda:
        unknowns.append(("lambda",))
        x0.append(_dyadic(lam, k))
        columns.append(one)
    # exact least-norm correction of A x = b
    rows = []
    rhs = []
    for mu in lay.mons:
        rows.append([col.coeff(mu) for col in columns])
        rhs.append(h.coeff(mu))
    resid = [bb - sum((a * x for a, x in zip(row, x0) if a), Fraction(0)) for row, bb in zip(rows, rhs)]
    if any(resid):
        aug = [row + [rr] for row, rr in zip(rows, resid)]
        R, piv = _rref(aug, len(columns) + 1)
        if len(columns) in piv:
            return None, "coefficient equations inconsistent"
        Rrows = [r_[:-1] for r_ in R]
        Rrhs = [r_[-1] for r_ in R]
        # minimum-norm t with Rrows t = Rrhs: t = Rrows^T (Rrows Rrows^T)^-1 Rrhs
        G = [[sum((a * b for a, b in zip(ri, rj) if a and b), Fraction(0)) for rj in Rrows] for ri in Rrows]
        w = _solve_exact(G, Rrhs)
        if w is None:
            return None, "singular normal equations"
        t = [sum((ri[j] * w[i] for i, ri in enumerate(Rrows) if ri[j]), Fraction(0)) for j in range(len(columns))]
        x = [a + b for a, b in zip(x0, t)]
    else:
        x = list(x0)
    cert = SoSCertificate(d)
    for bi, info in enumerate(block_info):
        if info is None:
            continue
        pc, pos, r = info
        H = [[Fraction(0)] * r for _ in range(r)]
        for (c, e), j in pos.items():
            H[c][e] = H[e][c] = x[j]
        f = ldl_psd(H)
        if f is None:
            return None, f"block {bi} not PSD after rounding"
        L, D = f
        for j in range(r):
            if D[j] == 0:
                continue
            sq = Polynomial(variables)
            for c in range(r):
                if L[c][j] != 0:
                    sq = sq + L[c][j] * pc[c]
            cert.add_square(lay.gkeys[bi], sq, D[j])
    for j, u in enumerate(unknowns):
        if u[0] == "alpha" and x[j] != 0:
            cert.add_equality(lay.ekeys[u[1]], x[j])
        elif u[0] == "lambda":
            if x[j] < 0:
                return None, "negative constant after rounding"
            cert.add_square((0,) * len(A.inequalities), one, x[j])
    ok, residual = verify_certificate(h, A, cert)
    if not ok:
        return None, f"exact verification failed: {residual}"
    return cert, "ok"


def _solve_exact(G, b):
    n = len(G)
    aug = [list(row) + [bb] for row, bb in zip(G, b)]
    R, piv = _rref(aug, n + 1)
    if len(piv) < n or n in piv:
        return None
    return [row[-1] for row in R]


def search_certificate(h, A, d, max_iter=500):
    """Find a degree-d certificate that A proves h >= 0, or a pseudo-expectation with E~(h) < 0."""
    if d < 0:
        raise ValueError("d must be nonnegative")
    if not isinstance(h, Polynomial):
        h = Polynomial.constant(A.variables, h)
    if h.degree() > d:
        raise ValueError(f"h has degree {h.degree()} > {d}")
    prob, lay = build_sdp(h, A, d)
    res = solve(prob, max_iter=max_iter)
    value = -res.dual_objective
    if res.status != "optimal" and abs(res.primal_objective - res.dual_objective) > 1e-5:
        return SearchResult("indeterminate", value=value, iterations=res.iterations,
                            detail=f"solver stopped: {res.status}, residuals {res.primal_residual:.2e}/{res.dual_residual:.2e}")
    if value < -INFEASIBLE_TOL:
        moments = {mu: float(-yi) for mu, yi in zip(lay.mons, res.y)}
        pe = PseudoExpectation(A.variables, d, moments)
        report = check_pseudo_expectation(pe, A, eq_tol=1e-7, psd_tol=1e-6)
        return SearchResult("infeasible", pe=pe, pe_report=report, value=value, iterations=res.iterations,
                            detail=f"E~(h) = {float(pe(h)):.6g}")
    n_eq = len(lay.epolys)
    lam = res.x[2 * n_eq] - res.x[2 * n_eq + 1]
    reasons = []
    for null_tol in NULL_TOLS:
        for k in DYADIC_LADDER:
            for use_lambda in ((False, True) if lam < 1e-6 else (True,)):
                cert, why = _round_attempt(h, A, d, lay, res, null_tol, k, use_lambda)
                if cert is not None:
                    return SearchResult("found", certificate=cert, proof=Proof(h, A, cert, "search"),
                                        value=value, iterations=res.iterations,
                                        detail=f"null_tol={null_tol}, dyadic 2^-{k}")
                reasons.append(why)
    return SearchResult("indeterminate", value=value, iterations=res.iterations,
                        detail="rounding failed: " + "; ".join(sorted(set(reasons))[:5]))


def search_by_degree(h, A, degrees=(2, 4, 6), max_iter=500):
    """Try increasing degrees until a certificate is found."""
    last = None
    for d in degrees:
        if d < h.degree():
            continue
        last = search_certificate(h, A, d, max_iter)
        if last.status == "found":
            return last
    return last
