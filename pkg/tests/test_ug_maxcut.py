import itertools
import math
import warnings
from collections import Counter
from fractions import Fraction

import pytest

from mistkit import cube_fourier as cf
from mistkit import ug_maxcut as ug

RHO = Fraction(-1, 2)


def _identity_instance(n=3, k=2):
    cons = [ug.Constraint(i, (i + 1) % n, tuple(range(k)), Fraction(1, n)) for i in range(n)]
    return ug.UGInstance(n, k, tuple(cons))


def test_ug_value_examples():
    inst = _identity_instance()
    assert ug.ug_value(inst, (1, 1, 1)) == 1
    t = ug.UGInstance(2, 3, (ug.Constraint(0, 1, (1, 0, 2), 1),))
    assert ug.ug_value(t, (0, 1)) == 1
    assert ug.ug_value(t, (0, 0)) == 0
    with pytest.raises(ValueError):
        ug.ug_value(t, (0, 3))


def test_ug_value_against_recount():
    inst, _ = ug.toy_generators("random", n=5, k=3, seed=4, shifts=(1, 2))
    for lab in itertools.islice(itertools.product(range(3), repeat=5), 0, 243, 17):
        count = Fraction(0)
        for c in inst.constraints:
            if c.pi[lab[c.u]] == lab[c.v]:
                count += c.w
        assert ug.ug_value(inst, lab) == count


def test_instance_validation():
    with pytest.raises(ValueError):
        ug.UGInstance(2, 2, (ug.Constraint(0, 1, (0, 0), 1),))
    with pytest.raises(ValueError):
        ug.UGInstance(2, 2, (ug.Constraint(0, 5, (0, 1), 1),))
    with pytest.raises(ValueError):
        ug.UGInstance(2, 2, ())


def test_instance_json_roundtrip(tmp_path):
    inst, _ = ug.toy_generators("perfect", n=4, k=3, seed=2)
    path = tmp_path / "inst.json"
    ug.save_instance(inst, path)
    assert ug.load_instance(path) == inst


def test_refutation_objective():
    inst, hidden = ug.toy_generators("perfect", n=4, k=3, seed=1)
    assert ug.refutation_objective(inst, ug.integral_table(inst, hidden)).value == 1
    assert ug.refutation_objective(inst, [[0] * 3] * 4).value == 0
    assert ug.refutation_objective(inst, [[Fraction(1, 3)] * 3] * 4).value == Fraction(1, 3)
    with pytest.warns(UserWarning):
        res = ug.refutation_objective(inst, [[1, 1, 0]] * 4)
    assert not res.feasible


def test_k1_self_loop_edges():
    inst = ug.UGInstance(1, 1, (ug.Constraint(0, 0, (0,), 1),))
    mc = ug.kkmo_exact(inst, RHO)
    plus, minus = (0, 0), (0, 1)
    assert mc.edges[(plus, minus)] == (1 - RHO) / 2
    assert mc.edges[(plus, plus)] + mc.edges[(minus, minus)] == (1 + RHO) / 2
    assert mc.edges[(plus, plus)] == mc.edges[(minus, minus)]
    assert mc.total_weight() == 1


def test_total_weight_is_one():
    for kind in ("perfect", "cycle-shift", "random"):
        inst, _ = ug.toy_generators(kind, n=4, k=3, seed=5)
        assert ug.kkmo_exact(inst, RHO).total_weight() == 1


def test_relabeling_gives_isomorphic_edges():
    inst, _ = ug.toy_generators("random", n=4, k=3, seed=7)
    sigma = [(1, 2, 0), (0, 2, 1), (2, 1, 0), (0, 1, 2)]
    compose = lambda a, b: tuple(a[b[i]] for i in range(len(b)))
    cons = [ug.Constraint(c.u, c.v, compose(compose(sigma[c.v], c.pi), ug.inverse(sigma[c.u])), c.w)
            for c in inst.constraints]
    other = ug.UGInstance(4, 3, tuple(cons))
    a, b = ug.kkmo_exact(inst, RHO), ug.kkmo_exact(other, RHO)
    tables = [ug.perm_table(s) for s in sigma]
    moved = {}
    for ((v1, x1), (v2, x2)), w in a.edges.items():
        p, q = (v1, tables[v1][x1]), (v2, tables[v2][x2])
        moved[(p, q) if p <= q else (q, p)] = w
    assert moved == b.edges


def test_perm_table_action():
    pi = (2, 0, 1)
    t = ug.perm_table(pi)
    for x in range(8):
        pt = cf.point_of(x, 3)
        moved = [0] * 3
        for i in range(3):
            moved[pi[i]] = pt[i]
        assert cf.point_of(t[x], 3) == tuple(moved)


def test_sampler_frequencies():
    inst = ug.UGInstance(1, 1, (ug.Constraint(0, 0, (0,), 1),))
    gen = ug.kkmo_reduce(inst, RHO, mode="sampler", seed=3)
    N = 20_000
    cut = sum(1 for e in itertools.islice(gen, N) if e[0][1] != e[1][1])
    p = float((1 - RHO) / 2)
    assert abs(cut / N - p) < 4 * math.sqrt(p * (1 - p) / N)


def test_sampler_matches_exact_distribution():
    inst, _ = ug.toy_generators("random", n=3, k=2, seed=2)
    mc = ug.kkmo_exact(inst, RHO)
    N = 40_000
    counts = Counter()
    for a, b in itertools.islice(ug.kkmo_sampler(inst, RHO, seed=1), N):
        counts[(a, b) if a <= b else (b, a)] += 1
    for e, w in mc.edges.items():
        p = float(w)
        assert abs(counts[e] / N - p) < 5 * math.sqrt(p * (1 - p) / N) + 1e-4


def test_csv_roundtrip(tmp_path):
    inst, _ = ug.toy_generators("perfect", n=3, k=2, seed=0)
    mc = ug.kkmo_exact(inst, RHO)
    path = tmp_path / "edges.csv"
    mc.write_csv(path)
    assert ug.read_edges_csv(path) == mc.edges
    assert ug.signs(0b101, 3) == "-+-"


def test_dictator_cut_value():
    inst, hidden = ug.toy_generators("perfect", n=4, k=3, seed=3)
    cv = ug.cut_value(inst, RHO, ug.dictator_cut(inst, hidden))
    assert cv.direct == cv.via_stability == (1 - RHO) / 2


def test_constant_and_random_cuts():
    inst, _ = ug.toy_generators("random", n=2, k=2, seed=0)
    assert ug.cut_value(inst, RHO, ug.constant_cut(inst)).direct == Fraction(1, 2)
    for seed in range(4):
        cv = ug.cut_value(inst, RHO, ug.random_cut(inst, seed))
        assert cv.agree


def test_cut_value_by_enumeration():
    # independent recount: pick u, two neighbours, a rho-correlated pair
    inst, _ = ug.toy_generators("random", n=3, k=2, seed=6)
    cut = ug.random_cut(inst, 2)
    agree, flip = (1 + RHO) / 2, (1 - RHO) / 2
    total = Fraction(0)
    for u in range(inst.n_vertices):
        hood = inst.neighborhoods[u]
        for (v1, p1), w1 in hood.items():
            for (v2, p2), w2 in hood.items():
                for x in range(4):
                    for y in range(4):
                        d = bin(x ^ y).count("1")
                        pr = agree ** (2 - d) * flip ** d / 4
                        a = cut.tables[v1](_act(p1, cf.point_of(x, 2)))
                        b = cut.tables[v2](_act(p2, cf.point_of(y, 2)))
                        total += w1 * w2 * pr * (a + b - 2 * a * b)
    total /= inst.n_vertices
    assert ug.cut_value(inst, RHO, cut).direct == total


def _act(pi, x):
    out = [0] * len(x)
    for i, xi in enumerate(x):
        out[pi[i]] = xi
    return out


def test_cut_json():
    inst, _ = ug.toy_generators("random", n=2, k=2, seed=0)
    cut = ug.random_cut(inst, 1)
    assert ug.CutAssignment.from_json(cut.to_json()) == cut


def test_bounds():
    assert ug.k_rho(0) == 0.5
    assert ug.k_rho(-1) == pytest.approx(0.0, abs=1e-15)
    rep = ug.bounds_report(-0.689)
    assert rep["ordered_here"] and rep["ordered_on_grid"]
    assert rep["target"] == pytest.approx(math.acos(-0.689) / math.pi)
    assert rep["sdp_like"] == pytest.approx((1 + 0.689) / 2)


def test_toy_generators():
    inst, hidden = ug.toy_generators("perfect", n=5, k=3, seed=9)
    assert ug.ug_value(inst, hidden) == 1
    assert ug.best_labeling(inst)[0] == 1
    a, _ = ug.toy_generators("random", n=4, k=3, seed=11)
    b, _ = ug.toy_generators("random", n=4, k=3, seed=11)
    assert a == b
    c, _ = ug.toy_generators("cycle-shift", n=4, k=3)
    assert {con.w for con in c.constraints} == {Fraction(1, 4)}
    with pytest.raises(ValueError):
        ug.toy_generators("other")


def test_rho_outside_regime_warns():
    inst = _identity_instance()
    with pytest.warns(UserWarning):
        ug.kkmo_exact(inst, Fraction(1, 2))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        ug.kkmo_exact(inst, RHO)


def test_size_caps():
    cons = tuple(ug.Constraint(i, (i + 1) % 17, (0,), Fraction(1, 17)) for i in range(17))
    with pytest.raises(cf.ResourceError):
        ug.kkmo_exact(ug.UGInstance(17, 1, cons), RHO)
