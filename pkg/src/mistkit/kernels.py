"""Hot numerical kernels.

Each kernel exists twice: an explicit loop version compiled with numba when
available (``*_loop``) and a vectorised numpy version (``*_np``).  The public
names dispatch on :data:`mistkit._accel.USE_NUMBA`.
"""
import math

import numpy as np

from ._accel import USE_NUMBA, njit, njit_parallel, prange

INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
TAIL = 8.5          # lower limit of the J integral in standard deviations
SERIES_CUT = 2.5    # |x| below this: Taylor series, above: continued fraction
CF_TERMS = 60
INV_SQRT_2 = 1.0 / math.sqrt(2.0)

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(10)


# ---------------------------------------------------------------------------
# standard normal cdf / inverse cdf


@njit
def _ncdf_scalar(x):
    # libm erfc keeps full relative accuracy in the lower tail
    return 0.5 * math.erfc(-x * INV_SQRT_2)


@njit
def _ninv_scalar(p):
    if not (0.0 < p < 1.0):
        return math.nan
    q = p if p < 0.5 else 1.0 - p
    t = math.sqrt(-2.0 * math.log(q))
    z = t - (2.515517 + 0.802853 * t + 0.010328 * t * t) / (
        1.0 + 1.432788 * t + 0.189269 * t * t + 0.001308 * t * t * t)
    z = -z if p < 0.5 else z
    for _ in range(8):
        dens = math.exp(-0.5 * z * z) * INV_SQRT_2PI
        if dens == 0.0:
            break
        u = (_ncdf_scalar(z) - p) / dens
        step = u / (1.0 + 0.5 * z * u)
        z -= step
        if abs(step) <= 1e-16 * (1.0 + abs(z)):
            break
    return z


@njit
def _ncdf_loop(x):
    out = np.empty(x.size)
    flat = x.ravel()
    for i in range(flat.size):
        out[i] = _ncdf_scalar(flat[i])
    return out.reshape(x.shape)


@njit
def _ninv_loop(p):
    out = np.empty(p.size)
    flat = p.ravel()
    for i in range(flat.size):
        out[i] = _ninv_scalar(flat[i])
    return out.reshape(p.shape)


def _ncdf_np(x):
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    ax = np.abs(x)
    small = ax <= SERIES_CUT
    if small.any():
        xs = x[small]
        x2 = xs * xs
        term = xs.copy()
        s = xs.copy()
        for k in range(1, 200):
            term *= x2 / (2 * k + 1)
            s += term
            if np.all(np.abs(term) <= 1e-17 * np.abs(s)):
                break
        out[small] = 0.5 + s * np.exp(-0.5 * x2) * INV_SQRT_2PI
    big = ~small
    if big.any():
        xb = x[big]
        ab = np.minimum(ax[big], 38.5)
        f = ab.copy()
        for k in range(CF_TERMS, 0, -1):
            f = ab + k / f
        q = np.exp(-0.5 * ab * ab) * INV_SQRT_2PI / f
        q = np.where(ax[big] > 38.5, 0.0, q)
        out[big] = np.where(xb < 0, q, 1.0 - q)
    return out


def _ninv_np(p):
    p = np.asarray(p, dtype=float)
    bad = ~((p > 0) & (p < 1))
    pp = np.where(bad, 0.5, p)
    q = np.minimum(pp, 1.0 - pp)
    t = np.sqrt(-2.0 * np.log(q))
    z = t - (2.515517 + 0.802853 * t + 0.010328 * t * t) / (
        1.0 + 1.432788 * t + 0.189269 * t * t + 0.001308 * t * t * t)
    z = np.where(pp < 0.5, -z, z)
    for _ in range(8):
        dens = np.exp(-0.5 * z * z) * INV_SQRT_2PI
        u = np.where(dens > 0, (_ncdf_np(z) - pp) / np.where(dens > 0, dens, 1.0), 0.0)
        step = u / (1.0 + 0.5 * z * u)
        z = z - step
        if np.all(np.abs(step) <= 1e-16 * (1.0 + np.abs(z))):
            break
    return np.where(bad, np.nan, z)


def norm_cdf(x):
    x = np.asarray(x, dtype=float)
    return _ncdf_loop(x) if USE_NUMBA else _ncdf_np(x)


def norm_inv_cdf(p):
    p = np.asarray(p, dtype=float)
    return _ninv_loop(p) if USE_NUMBA else _ninv_np(p)


# ---------------------------------------------------------------------------
# J_rho by fixed composite Gauss-Legendre


def _panel_width(rho):
    r = math.sqrt(1.0 - rho * rho)
    return 1.25 * min(1.0, r / max(abs(rho), 1e-300))


@njit
def _quadrant_scalar(s, t, rho, r, h_max, nodes, weights):
    # P(X <= s, Y <= t) for s <= 0, integrating from -TAIL
    if s <= -TAIL:
        return 0.0
    length = s + TAIL
    panels = int(math.ceil(length / h_max))
    h = length / panels
    acc = 0.0
    for p in range(panels):
        a = -TAIL + p * h
        part = 0.0
        for q in range(nodes.size):
            sp = a + 0.5 * h * (nodes[q] + 1.0)
            part += weights[q] * math.exp(-0.5 * sp * sp) * _ncdf_scalar((t - rho * sp) / r)
        acc += part * 0.5 * h
    return acc * INV_SQRT_2PI


@njit_parallel
def _j_points_loop(s, t, rho, h_max, nodes, weights):
    r = math.sqrt(1.0 - rho * rho)
    out = np.empty(s.size)
    for i in prange(s.size):
        si = s[i]
        ti = t[i]
        if si <= 0.0:
            out[i] = _quadrant_scalar(si, ti, rho, r, h_max, nodes, weights)
        else:
            out[i] = _ncdf_scalar(ti) - _quadrant_scalar(-si, ti, -rho, r, h_max, nodes, weights)
    return out


def _quadrant_np(s, t, rho, h_max, chunk=4096):
    r = math.sqrt(1.0 - rho * rho)
    out = np.zeros(s.size)
    for lo in range(0, s.size, chunk):
        ss = s[lo:lo + chunk]
        tt = t[lo:lo + chunk]
        length = np.maximum(ss + TAIL, 0.0)
        panels = max(int(math.ceil(length.max() / h_max)), 1)
        h = length / panels
        acc = np.zeros(ss.size)
        for p in range(panels):
            a = -TAIL + p * h
            sp = a[:, None] + 0.5 * h[:, None] * (_GL_NODES[None, :] + 1.0)
            vals = np.exp(-0.5 * sp * sp) * _ncdf_np((tt[:, None] - rho * sp) / r)
            acc += 0.5 * h * (vals @ _GL_WEIGHTS)
        out[lo:lo + chunk] = acc * INV_SQRT_2PI
    return out


def _j_points_np(s, t, rho, h_max):
    out = np.empty(s.size)
    neg = s <= 0
    out[neg] = _quadrant_np(s[neg], t[neg], rho, h_max)
    pos = ~neg
    if pos.any():
        out[pos] = _ncdf_np(t[pos]) - _quadrant_np(-s[pos], t[pos], -rho, h_max)
    return out


def j_points(s, t, rho):
    """J in Gaussian coordinates at paired arrays ``s``, ``t`` (broadcast)."""
    s, t = np.broadcast_arrays(np.asarray(s, float), np.asarray(t, float))
    shape = s.shape
    s = np.array(s, dtype=float).ravel()
    t = np.array(t, dtype=float).ravel()
    h = _panel_width(rho)
    if USE_NUMBA:
        out = _j_points_loop(s, t, float(rho), h, _GL_NODES, _GL_WEIGHTS)
    else:
        out = _j_points_np(s, t, float(rho), h)
    return out.reshape(shape)


@njit
def _j_grid_loop(s, t, rho, h_max, nodes, weights):
    r = math.sqrt(1.0 - rho * rho)
    out = np.empty((s.size, t.size))
    for j in range(t.size):
        tj = t[j]
        acc = _quadrant_scalar(min(s[0], 0.0), tj, rho, r, h_max, nodes, weights)
        prev = min(s[0], 0.0)
        for i in range(s.size):
            gap = s[i] - prev
            if gap > 0.0:
                panels = int(math.ceil(gap / h_max))
                h = gap / panels
                for p in range(panels):
                    a = prev + p * h
                    part = 0.0
                    for q in range(nodes.size):
                        sp = a + 0.5 * h * (nodes[q] + 1.0)
                        part += weights[q] * math.exp(-0.5 * sp * sp) * _ncdf_scalar((tj - rho * sp) / r)
                    acc += part * 0.5 * h * INV_SQRT_2PI
                prev = s[i]
            out[i, j] = acc
    return out


def _j_grid_np(s, t, rho, h_max):
    r = math.sqrt(1.0 - rho * rho)
    start = min(s[0], 0.0)
    acc = _quadrant_np(np.full(t.size, start), t, rho, h_max)
    out = np.empty((s.size, t.size))
    prev = start
    for i in range(s.size):
        gap = s[i] - prev
        if gap > 0.0:
            panels = int(math.ceil(gap / h_max))
            h = gap / panels
            for p in range(panels):
                sp = prev + p * h + 0.5 * h * (_GL_NODES + 1.0)
                vals = np.exp(-0.5 * sp * sp)[None, :] * _ncdf_np((t[:, None] - rho * sp[None, :]) / r)
                acc = acc + 0.5 * h * INV_SQRT_2PI * (vals @ _GL_WEIGHTS)
            prev = s[i]
        out[i] = acc
    return out


def j_grid(s, t, rho):
    """Tensor grid of J in Gaussian coordinates; ``s`` must be ascending.

    Integrates cumulatively along ``s`` so each grid step only adds a short panel.
    """
    s = np.ascontiguousarray(s, dtype=float)
    t = np.ascontiguousarray(t, dtype=float)
    if s.size > 1 and np.any(np.diff(s) < 0):
        raise ValueError("s grid must be ascending")
    h = _panel_width(rho)
    if USE_NUMBA:
        return _j_grid_loop(s, t, float(rho), h, _GL_NODES, _GL_WEIGHTS)
    return _j_grid_np(s, t, float(rho), h)


# ---------------------------------------------------------------------------
# majority stability through the agreement count


@njit
def _log_binom(n, k):
    return math.lgamma(n + 1.0) - math.lgamma(k + 1.0) - math.lgamma(n - k + 1.0)


@njit
def _maj_stab_loop(n, rho):
    p = 0.5 * (1.0 + rho)
    lp = math.log(p) if p > 0 else -math.inf
    lq = math.log(1.0 - p) if p < 1 else -math.inf
    ln2 = math.log(2.0)
    total = 0.0
    cum = np.empty(n + 2)
    for k in range(n + 1):
        lw = _log_binom(n, k)
        lw += k * lp if k > 0 else 0.0
        lw += (n - k) * lq if n - k > 0 else 0.0
        if lw < -745.0:
            continue
        m = n - k
        c = 0.0
        for j in range(m + 1):
            c += math.exp(_log_binom(m, j) - m * ln2)
            cum[j] = c
        inner = 0.0
        for a in range(k + 1):
            gap = abs(2 * a - k)
            lo = max((m - gap + 1) // 2, 0)
            hi = min((m + gap - 1) // 2, m)
            if lo > hi:
                continue
            prob = cum[hi] - (cum[lo - 1] if lo > 0 else 0.0)
            inner += math.exp(_log_binom(k, a) - k * ln2) * prob
        total += math.exp(lw) * inner
    return total


def _binom_pmf_np(n, p):
    k = np.arange(n + 1)
    from math import lgamma
    lg = np.array([lgamma(i + 1.0) for i in range(n + 1)])
    with np.errstate(divide="ignore"):
        lp = np.log(p) if p > 0 else -np.inf
        lq = np.log1p(-p) if p < 1 else -np.inf
    logs = lg[n] - lg[k] - lg[n - k]
    logs = logs + np.where(k > 0, k * lp, 0.0) + np.where(n - k > 0, (n - k) * lq, 0.0)
    return np.exp(logs)


def _maj_stab_np(n, rho):
    wk = _binom_pmf_np(n, 0.5 * (1.0 + rho))
    total = 0.0
    for k in range(n + 1):
        if wk[k] == 0.0:
            continue
        m = n - k
        cum = np.cumsum(_binom_pmf_np(m, 0.5))
        a = np.arange(k + 1)
        gap = np.abs(2 * a - k)
        lo = np.maximum((m - gap + 1) // 2, 0)
        hi = np.minimum((m + gap - 1) // 2, m)
        ok = lo <= hi
        upper = cum[np.clip(hi, 0, m)]
        lower = np.where(lo > 0, cum[np.clip(lo - 1, 0, m)], 0.0)
        prob = np.where(ok, upper - lower, 0.0)
        total += wk[k] * float(_binom_pmf_np(k, 0.5) @ prob)
    return total


def majority_stab(n, rho):
    """Two-sided Stab_rho(Maj_n) for odd n in O(n^2) time."""
    if USE_NUMBA:
        return float(_maj_stab_loop(int(n), float(rho)))
    return float(_maj_stab_np(int(n), float(rho)))


# ---------------------------------------------------------------------------
# rho-correlated expectation over the cube


@njit
def _hamming_sum_loop(F, weights):
    N = F.shape[0]
    acc = 0.0
    for x in range(N):
        for y in range(F.shape[1]):
            z = x ^ y
            d = 0
            while z:
                z &= z - 1
                d += 1
            acc += F[x, y] * weights[d]
    return acc


def _hamming_sum_np(F, weights):
    idx = np.arange(F.shape[0], dtype=np.uint64)
    dist = np.bitwise_count(idx[:, None] ^ idx[None, :])
    return float(np.sum(F * weights[dist]))


def correlated_sum(F, n, rho):
    """sum_{x,y} F[x,y] prod_i w(x_i,y_i) with w(same)=(1+rho)/4, w(diff)=(1-rho)/4."""
    F = np.ascontiguousarray(F, dtype=float)
    d = np.arange(n + 1)
    weights = ((1.0 + rho) / 4.0) ** (n - d) * ((1.0 - rho) / 4.0) ** d
    if USE_NUMBA:
        return float(_hamming_sum_loop(F, weights))
    return _hamming_sum_np(F, weights)


# ---------------------------------------------------------------------------
# Bernstein basis


@njit
def _bernstein_basis_loop(n, u):
    out = np.empty((u.size, n + 1))
    lb = np.empty(n + 1)
    for k in range(n + 1):
        lb[k] = _log_binom(n, k)
    for i in range(u.size):
        x = u[i]
        if x <= 0.0 or x >= 1.0:
            for k in range(n + 1):
                out[i, k] = 0.0
            out[i, 0 if x <= 0.0 else n] = 1.0
            continue
        lx = math.log(x)
        l1 = math.log1p(-x)
        for k in range(n + 1):
            out[i, k] = math.exp(lb[k] + k * lx + (n - k) * l1)
    return out


def _bernstein_basis_np(n, u):
    from math import lgamma
    k = np.arange(n + 1)
    lg = np.array([lgamma(i + 1.0) for i in range(n + 1)])
    lb = lg[n] - lg[k] - lg[n - k]
    uu = np.clip(u, 1e-300, 1 - 1e-16)[:, None]
    with np.errstate(divide="ignore"):
        vals = np.exp(lb[None, :] + k[None, :] * np.log(uu) + (n - k)[None, :] * np.log1p(-uu))
    vals[u <= 0.0] = (k == 0).astype(float)
    vals[u >= 1.0] = (k == n).astype(float)
    return vals


def bernstein_basis(n, u):
    """Matrix of b_{k,n}(u_i) = C(n,k) u^k (1-u)^(n-k); rows index the points."""
    u = np.ascontiguousarray(u, dtype=float).ravel()
    if USE_NUMBA:
        return _bernstein_basis_loop(int(n), u)
    return _bernstein_basis_np(int(n), u)


def _scalar(f):
    return f if USE_NUMBA or not hasattr(f, "py_func") else f.py_func


ncdf_scalar = _scalar(_ncdf_scalar)
ninv_scalar = _scalar(_ninv_scalar)
