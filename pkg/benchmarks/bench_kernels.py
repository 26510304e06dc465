"""Time the hot kernels under the numba and the pure-numpy backends and check they agree.

    python3 benchmarks/bench_kernels.py [--repeat 3]

Each backend runs in its own interpreter because MISTKIT_NUMBA is read at import time.
"""
import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def _cases():
    from mistkit import kernels

    rng = np.random.default_rng(0)
    p = rng.uniform(1e-6, 1 - 1e-6, 200_000)
    s = rng.normal(size=20_000)
    t = rng.normal(size=20_000)
    z = np.linspace(-3, 3, 200)
    u = rng.uniform(size=2000)
    F = rng.random((256, 256))
    return {
        "norm_cdf": lambda: kernels.norm_cdf(s),
        "norm_inv_cdf": lambda: kernels.norm_inv_cdf(p),
        "j_points": lambda: kernels.j_points(s, t, -0.5),
        "j_grid": lambda: kernels.j_grid(z, z, 0.5),
        "majority_stab": lambda: np.array([kernels.majority_stab(2001, 0.5)]),
        "correlated_sum": lambda: np.array([kernels.correlated_sum(F, 8, 0.3)]),
        "bernstein_basis": lambda: kernels.bernstein_basis(512, u),
    }


def worker(repeat):
    from mistkit import backend

    out = {"backend": backend(), "times": {}, "checksums": {}}
    for name, fn in _cases().items():
        t0 = time.perf_counter()
        first = fn()   # includes compilation or cache load
        warm = time.perf_counter() - t0
        best = float("inf")
        for _ in range(repeat):
            t0 = time.perf_counter()
            fn()
            best = min(best, time.perf_counter() - t0)
        out["times"][name] = {"first": warm, "best": best}
        out["checksums"][name] = np.asarray(first, float).ravel()[:64].tolist()
    json.dump(out, sys.stdout)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--worker", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args()
    if args.worker:
        worker(args.repeat)
        return 0
    runs = {}
    for flag in ("1", "0"):
        env = dict(os.environ, MISTKIT_NUMBA=flag)
        res = subprocess.run([sys.executable, __file__, "--worker", "--repeat", str(args.repeat)],
                             env=env, capture_output=True, text=True, check=True)
        r = json.loads(res.stdout)
        runs[r["backend"]] = r
    nb, py = runs["numba"], runs["numpy"]
    print(f"{'kernel':18s} {'numba':>10s} {'numpy':>10s} {'speedup':>8s}  max |diff|")
    worst = 0.0
    for name in nb["times"]:
        a, b = nb["times"][name]["best"], py["times"][name]["best"]
        diff = float(np.max(np.abs(np.subtract(nb["checksums"][name], py["checksums"][name]))))
        worst = max(worst, diff)
        print(f"{name:18s} {a * 1e3:9.2f}ms {b * 1e3:9.2f}ms {b / a:7.1f}x  {diff:.1e}")
    return 0 if worst < 1e-9 else 1


if __name__ == "__main__":
    sys.exit(main())
