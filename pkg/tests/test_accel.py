import json
import os
import subprocess
import sys

import numpy as np
import pytest

from mistkit import backend, kernels

SCRIPT = """
import json, numpy as np
from mistkit import backend, kernels
rng = np.random.default_rng(0)
s, t = rng.normal(size=300), rng.normal(size=300)
u = rng.uniform(size=50)
F = rng.random((16, 16))
out = {
    "backend": backend(),
    "cdf": kernels.norm_cdf(s).tolist(),
    "inv": kernels.norm_inv_cdf(rng.uniform(1e-9, 1 - 1e-9, 300)).tolist(),
    "j_points": kernels.j_points(s, t, -0.5).tolist(),
    "j_grid": kernels.j_grid(np.sort(s[:20]), np.sort(t[:20]), 0.7).ravel().tolist(),
    "maj": kernels.majority_stab(51, 0.3),
    "corr": kernels.correlated_sum(F, 4, 0.2),
    "basis": kernels.bernstein_basis(30, u).ravel().tolist(),
}
print(json.dumps(out))
"""


def _run(flag):
    env = dict(os.environ, MISTKIT_NUMBA=flag)
    res = subprocess.run([sys.executable, "-c", SCRIPT], env=env, capture_output=True, text=True, check=True)
    return json.loads(res.stdout)


@pytest.fixture(scope="module")
def both():
    return _run("1"), _run("0")


def test_flag_selects_backend(both):
    nb, py = both
    assert py["backend"] == "numpy"
    assert nb["backend"] in ("numba", "numpy")


def test_backends_agree(both):
    nb, py = both
    for key in ("cdf", "inv", "j_points", "j_grid", "maj", "corr", "basis"):
        assert np.allclose(nb[key], py[key], rtol=1e-12, atol=1e-13), key


def test_correlated_sum_against_enumeration():
    rng = np.random.default_rng(5)
    F = rng.random((8, 8))
    rho = -0.3
    ref = 0.0
    for x in range(8):
        for y in range(8):
            d = bin(x ^ y).count("1")
            ref += F[x, y] * ((1 + rho) / 2) ** (3 - d) * ((1 - rho) / 2) ** d / 8
    assert kernels.correlated_sum(F, 3, rho) == pytest.approx(ref, abs=1e-14)


def test_backend_name():
    assert backend() in ("numba", "numpy")


def test_grid_matches_pointwise():
    s = np.linspace(-2, 2, 9)
    t = np.linspace(-1.5, 2.5, 7)
    S, T = np.meshgrid(s, t, indexing="ij")
    assert np.allclose(kernels.j_grid(s, t, -0.6), kernels.j_points(S.ravel(), T.ravel(), -0.6).reshape(9, 7),
                       atol=1e-14)
