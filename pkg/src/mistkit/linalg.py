"""Small dense symmetric eigensolver (cyclic Jacobi)."""
import math

import numpy as np


def jacobi_eigh(a, tol=1e-14, max_sweeps=100):
    """Eigenvalues (ascending) and eigenvectors (columns) of a symmetric matrix."""
    a = np.array(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("square matrix expected")
    if not np.allclose(a, a.T, rtol=1e-12, atol=1e-12 * (1 + np.abs(a).max(initial=0))):
        raise ValueError("matrix is not symmetric")
    a = 0.5 * (a + a.T)
    n = a.shape[0]
    v = np.eye(n)
    scale = np.linalg.norm(a)
    for _ in range(max_sweeps):
        off = math.sqrt(max(np.sum(a * a) - np.sum(np.diag(a) ** 2), 0.0))
        if off <= tol * max(scale, 1e-300):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                # rotate rows/columns p and q
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                ap = a[p, :].copy()
                aq = a[q, :].copy()
                a[p, :] = c * ap - s * aq
                a[q, :] = s * ap + c * aq
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    w = np.diag(a).copy()
    order = np.argsort(w)
    return w[order], v[:, order]


def min_eigenvalue(a):
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        return 0.0
    return float(jacobi_eigh(a)[0][0])


def singular_values(m):
    """Singular values (descending), from the eigenvalues of [[0, m], [m^T, 0]]."""
    m = np.asarray(m, dtype=float)
    r, c = m.shape
    aug = np.zeros((r + c, r + c))
    aug[:r, r:] = m
    aug[r:, :r] = m.T
    w, _ = jacobi_eigh(aug)
    return np.clip(w[::-1][:min(r, c)], 0.0, None)
