"""Dense primal-dual interior point method (HKM direction, Mehrotra corrector).

Primal:  min <C, X> + c.x   s.t.  A(X) + A_lp x = b,  X PSD (block diagonal), x >= 0
Dual:    max b.y            s.t.  C - A^T y = Z PSD,  c - A_lp^T y = z >= 0
"""
import math
from dataclasses import dataclass

import numpy as np

MAX_ITER = 500
GAP_TOL = 1e-9


@dataclass
class SDPProblem:
    blocks: list      # per block: (m, n_k, n_k) constraint matrices
    C: list           # per block: (n_k, n_k)
    A_lp: np.ndarray  # (m, n_lp)
    c_lp: np.ndarray
    b: np.ndarray
    free_pairs: tuple = ()   # (i, j): LP columns with A_lp[:, j] = -A_lp[:, i], i.e. a split free variable

    @property
    def m(self):
        return len(self.b)


@dataclass
class SDPResult:
    status: str
    X: list
    x: np.ndarray
    y: np.ndarray
    Z: list
    z: np.ndarray
    primal_objective: float
    dual_objective: float
    iterations: int
    primal_residual: float
    dual_residual: float


def _sym(W):
    return 0.5 * (W + W.T)


def _apply(blocks, Xs):
    out = 0.0
    for A, X in zip(blocks, Xs):
        out = out + np.einsum("iab,ab->i", A, X)
    return out


def _adjoint(A, y):
    return np.einsum("iab,i->ab", A, y)


def _max_step_psd(X, dX):
    try:
        L = np.linalg.cholesky(X)
        Li = np.linalg.inv(L)
        W = Li @ dX @ Li.T
    except np.linalg.LinAlgError:
        w, V = np.linalg.eigh(X)
        w = np.maximum(w, 1e-300)
        S = V / np.sqrt(w)
        W = S.T @ dX @ S
    lo = np.linalg.eigvalsh(_sym(W))[0] if W.size else 0.0
    return math.inf if lo >= 0 else -1.0 / lo


def _max_step_lp(x, dx):
    neg = dx < 0
    if not np.any(neg):
        return math.inf
    return float(np.min(-x[neg] / dx[neg]))


def solve(prob, max_iter=MAX_ITER, gap_tol=GAP_TOL, tau=0.95, init_scale=1.0):
    m = prob.m
    sizes = [C.shape[0] for C in prob.C]
    n_lp = prob.A_lp.shape[1]
    X = [init_scale * np.eye(n) for n in sizes]
    Z = [init_scale * np.eye(n) for n in sizes]
    x = init_scale * np.ones(n_lp)
    z = init_scale * np.ones(n_lp)
    y = np.zeros(m)
    N = sum(sizes) + n_lp
    bnorm = 1.0 + np.linalg.norm(prob.b)
    cnorm = 1.0 + sum(np.linalg.norm(C) for C in prob.C) + np.linalg.norm(prob.c_lp)
    status = "max_iter"
    it = 0
    for it in range(1, max_iter + 1):
        rp = prob.b - _apply(prob.blocks, X) - prob.A_lp @ x
        Rd = [C - _adjoint(A, y) - Zk for A, C, Zk in zip(prob.blocks, prob.C, Z)]
        rd = prob.c_lp - prob.A_lp.T @ y - z
        mu = (sum(np.sum(Xk * Zk) for Xk, Zk in zip(X, Z)) + x @ z) / N
        pobj = sum(np.sum(C * Xk) for C, Xk in zip(prob.C, X)) + prob.c_lp @ x
        dobj = prob.b @ y
        pres = np.linalg.norm(rp) / bnorm
        dres = (sum(np.linalg.norm(R) for R in Rd) + np.linalg.norm(rd)) / cnorm
        gap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
        if gap <= gap_tol and pres <= gap_tol and dres <= gap_tol:
            status = "optimal"
            break
        Zi = [np.linalg.inv(Zk) for Zk in Z]
        # Schur complement
        M = (prob.A_lp * (x / z)) @ prob.A_lp.T
        for A, Xk, Zik in zip(prob.blocks, X, Zi):
            P = np.einsum("iab,bc->iac", A, Xk)
            Q = np.einsum("jab,bc->jac", A, Zik)
            M = M + np.einsum("iab,jba->ij", P, Q)
        M = _sym(M)

        def direction(target, corr_blocks, corr_lp):
            G = [(target * np.eye(len(Xk)) - Xk @ Zk - cb) @ Zik
                 for Xk, Zk, Zik, cb in zip(X, Z, Zi, corr_blocks)]
            g = (target - x * z - corr_lp) / z
            rhs = rp - _apply(prob.blocks, G) + _apply(prob.blocks, [Xk @ R @ Zik for Xk, R, Zik in zip(X, Rd, Zi)])
            rhs = rhs - prob.A_lp @ g + prob.A_lp @ (x * rd / z)
            try:
                dy = np.linalg.solve(M, rhs)
            except np.linalg.LinAlgError:
                dy = np.linalg.lstsq(M, rhs, rcond=None)[0]
            dZ = [R - _adjoint(A, dy) for R, A in zip(Rd, prob.blocks)]
            dX = [_sym(Gk - Xk @ dZk @ Zik) for Gk, Xk, dZk, Zik in zip(G, X, dZ, Zi)]
            dz = rd - prob.A_lp.T @ dy
            dx = g - x * dz / z
            return dX, dx, dy, dZ, dz

        def steps(dX, dx, dZ, dz):
            ap = min([1.0, tau * _max_step_lp(x, dx)] + [tau * _max_step_psd(Xk, d) for Xk, d in zip(X, dX)])
            ad = min([1.0, tau * _max_step_lp(z, dz)] + [tau * _max_step_psd(Zk, d) for Zk, d in zip(Z, dZ)])
            return ap, ad

        zeros = [np.zeros_like(Xk) for Xk in X]
        dX, dx, dy, dZ, dz = direction(0.0, zeros, np.zeros(n_lp))
        ap, ad = steps(dX, dx, dZ, dz)
        mu_aff = (sum(np.sum((Xk + ap * a) * (Zk + ad * b_)) for Xk, a, Zk, b_ in zip(X, dX, Z, dZ))
                  + (x + ap * dx) @ (z + ad * dz)) / N
        sigma = min(1.0, (mu_aff / mu) ** 3) if mu > 0 else 0.0
        corr = [a @ b_ for a, b_ in zip(dX, dZ)]
        dX, dx, dy, dZ, dz = direction(sigma * mu, corr, dx * dz)
        ap, ad = steps(dX, dx, dZ, dz)
        X = [_sym(Xk + ap * d) for Xk, d in zip(X, dX)]
        x = x + ap * dx
        y = y + ad * dy
        Z = [_sym(Zk + ad * d) for Zk, d in zip(Z, dZ)]
        z = z + ad * dz
        for i, j in prob.free_pairs:
            # a split free variable may drift off to infinity; pull both halves down
            shift = 0.9 * min(x[i], x[j])
            if shift > 1.0:
                x[i] -= shift
                x[j] -= shift
    pobj = sum(np.sum(C * Xk) for C, Xk in zip(prob.C, X)) + prob.c_lp @ x
    dobj = prob.b @ y
    rp = prob.b - _apply(prob.blocks, X) - prob.A_lp @ x
    Rd = [C - _adjoint(A, y) - Zk for A, C, Zk in zip(prob.blocks, prob.C, Z)]
    rd = prob.c_lp - prob.A_lp.T @ y - z
    return SDPResult(status, X, x, y, Z, z, float(pobj), float(dobj), it,
                     float(np.linalg.norm(rp) / bnorm),
                     float((sum(np.linalg.norm(R) for R in Rd) + np.linalg.norm(rd)) / cnorm))
