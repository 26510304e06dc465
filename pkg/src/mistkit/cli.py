"""Command line front end.  Every subcommand writes a JSON report; exit 0 iff its checks pass."""
import argparse
import csv
import io
import json
import re
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import acceptance
from . import bernstein_approx as ba
from . import cube_fourier as cf
from . import delta_functionals as dl
from . import gaussian_j as gj
from . import tensorization as tz
from . import ug_maxcut as ug
from .sos import library
from .sos.polynomial import Polynomial, parse
from .sos.proofs import (ConstraintSet, Proof, PseudoExpectation, check_pseudo_expectation,
                         interval_constraints, unconstrained)
from .sos.search import search_certificate


class UsageError(ValueError):
    pass


def _jsonable(o):
    if isinstance(o, Fraction):
        return str(o)
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (set, frozenset)):
        return sorted(o)
    if hasattr(o, "to_json"):
        return o.to_json()
    raise TypeError(f"cannot serialise {type(o).__name__}")


def _emit(args, report, ok):
    report = {"command": args.command, "ok": bool(ok), **report}
    text = json.dumps(report, indent=1, default=_jsonable)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return 0 if ok else 1


def parse_function(spec):
    """maj:5, dictator:4[:i], parity:4[:1,3], const:3:1/2, random:n:bits[:seed], or a JSON file."""
    p = Path(spec)
    if p.suffix == ".json" and p.exists():
        d = json.loads(p.read_text())
        vals = d["values"] if isinstance(d, dict) else d
        n = (len(vals) - 1).bit_length()
        tag = d.get("range", cf.UNIT) if isinstance(d, dict) else cf.UNIT
        return cf.BooleanFunction(n, tuple(Fraction(str(v)) for v in vals), tag)
    name, *rest = spec.split(":")
    try:
        if name in ("maj", "majority"):
            return cf.majority(int(rest[0]))
        if name in ("dictator", "dict"):
            n = int(rest[0]) if rest else 1
            return cf.dictator(n, int(rest[1]) if len(rest) > 1 else 1)
        if name == "parity":
            n = int(rest[0])
            S = [int(s) for s in rest[1].split(",")] if len(rest) > 1 else range(1, n + 1)
            f = cf.parity(n, S)
            return cf.BooleanFunction(n, tuple((1 + v) / 2 for v in f.values), cf.UNIT)
        if name in ("const", "constant"):
            return cf.constant(int(rest[0]), Fraction(rest[1]))
        if name == "random":
            return cf.random_dyadic(int(rest[0]), int(rest[1]), int(rest[2]) if len(rest) > 2 else 0)
    except (IndexError, ValueError) as e:
        raise UsageError(f"bad function spec {spec!r}: {e}") from e
    raise UsageError(f"unknown function spec {spec!r}")


def _frac(s):
    try:
        return Fraction(s)
    except (ValueError, ZeroDivisionError) as e:
        raise argparse.ArgumentTypeError(f"not a rational number: {s!r}") from e


def _load_json(path):
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise UsageError(f"cannot read {path}: {e}") from e


# ---------------------------------------------------------------------------
# commands


def cmd_fourier(args):
    f = parse_function(args.f)
    fe = f.fourier
    coeffs = {",".join(map(str, cf.set_of(S))) or "{}": str(c) for S, c in enumerate(fe.coeffs) if c}
    infl = [str(cf.influence(fe, i)) for i in range(1, f.n + 1)]
    return _emit(args, {"n": f.n, "mean": str(fe.mean()), "coefficients": coeffs, "influences": infl,
                        "parseval": fe.weight() == sum(v * v for v in f.values) / len(f.values)}, True)


def cmd_stab(args):
    rho = args.rho
    if args.maj is not None:
        value = cf.majority_stability_dp(args.maj, float(rho))
        return _emit(args, {"function": f"maj:{args.maj}", "rho": float(rho), "stab": value,
                            "sheppard_limit": gj.sheppard_two_sided(float(rho))}, True)
    if args.f is None:
        raise UsageError("stab needs --maj N or --f SPEC")
    f = parse_function(args.f)
    value = cf.stab_two_sided(f.fourier, rho)
    return _emit(args, {"function": args.f, "rho": str(rho), "stab": float(value), "stab_exact": str(value),
                        "sheppard_limit": gj.sheppard_two_sided(float(rho))}, True)


def cmd_delta(args):
    f = parse_function(args.f)
    rep = dl.delta_report(f, args.sigma)
    ok = rep.delta_recursive == rep.delta_fourier and rep.delta_recursive <= rep.flip_bound
    return _emit(args, {"function": args.f, **rep.to_json(), "variance_identity": dl.variance_identity(f)},
                 ok and dl.variance_identity(f))


def cmd_jgrid(args):
    z = np.linspace(args.lo, args.hi, args.grid)
    X, Y = np.meshgrid(z, z, indexing="ij")
    D = gj.j_derivatives(args.rho, X, Y)
    keys = list(D)
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["x", "y"] + keys)
        for idx in np.ndindex(X.shape):
            w.writerow([f"{X[idx]:.6g}", f"{Y[idx]:.6g}"] + [repr(float(D[k][idx])) for k in keys])
        if args.out:
            Path(args.out).write_text(buf.getvalue())
        else:
            sys.stdout.write(buf.getvalue())
        return 0
    return _emit(args, {"rho": args.rho, "grid": z, "values": {k: D[k] for k in keys}}, True)


def cmd_check_base(args):
    rep = tz.base_case_sweep(args.rho, args.eps, trials=args.trials, seed=args.seed)
    return _emit(args, {"rho": args.rho, "eps": args.eps, "seed": args.seed, **rep.to_json()}, rep.ok)


def _smoothed(spec, args):
    f = parse_function(spec)
    if args.smooth is not None:
        eps, eta = args.smooth
        f = cf.smooth(f, eps, eta)
    return f


def cmd_check_tensor(args):
    f = _smoothed(args.f, args)
    g = _smoothed(args.g or args.f, args)
    rep = tz.check_tensorization(f, g, args.rho, eps=args.eps, C_coeff=args.C, C_exp=args.C_exp)
    return _emit(args, {"f": args.f, "g": args.g or args.f, "rho": args.rho, **rep.to_json()}, rep.ok)


def cmd_check_mist(args):
    f = parse_function(args.f)
    rep = tz.check_mist(f, args.rho, C=args.C)
    return _emit(args, {"f": args.f, "rho": args.rho, **rep.to_json()}, rep.ok)


def cmd_check_borell(args):
    fn = tz.clipped_sigmoid(args.eps, args.scale)
    rep = tz.borell_block_check(fn, fn, args.rho, m=args.m, trials=args.trials, d=args.d, seed=args.seed)
    return _emit(args, {"rho": args.rho, **rep.to_json()}, rep.ok)


def cmd_approx_j(args):
    jt = ba.approximate_j(args.rho, args.eps, args.delta, cap=args.cap)
    ratios = ba.ladder_ratios(jt.ladder)
    report = {"rho": args.rho, "eps": args.eps, "delta": args.delta, "n": jt.n,
              "error": jt.ladder[-1]["error"], "ladder_ratios": ratios}
    if args.save:
        Path(args.save).write_text(json.dumps(jt.to_json(), default=_jsonable))
        report["saved"] = args.save
    else:
        report["ladder"] = jt.ladder
    return _emit(args, report, jt.ladder[-1]["error"] <= args.delta)


def cmd_sos_verify(args):
    d = _load_json(args.cert)
    proof = Proof.from_json(d)
    ok, residual = proof.verify()
    return _emit(args, {"name": proof.name, "degree": proof.cert.degree, "residual": repr(residual)}, ok)


def _problem(args):
    if args.problem:
        d = _load_json(args.problem)
        A = ConstraintSet.from_json(d["constraints"])
        return Polynomial.from_json(A.variables, d["h"]), A, int(d.get("degree", args.degree or 0))
    if not args.h or not args.vars:
        raise UsageError("give --problem FILE or --h EXPR --vars NAMES")
    names = tuple(v.strip() for v in args.vars.split(","))
    A = interval_constraints(names) if args.box else unconstrained(names)
    return parse(args.h, names), A, args.degree


def cmd_sos_search(args):
    h, A, d = _problem(args)
    if not d:
        raise UsageError("search degree missing (--degree)")
    res = search_certificate(h, A, d, max_iter=args.max_iter)
    if args.expect == "any":
        ok = res.status in ("found", "infeasible")
    else:
        ok = res.status == args.expect
    if res.status == "infeasible" and res.pe_report is not None:
        ok = ok and res.pe_report.ok
    return _emit(args, {"h": repr(h), "degree": d, **res.to_json()}, ok)


def cmd_sos_library(args):
    entries = []
    if args.id:
        params = json.loads(args.params) if args.params else {}
        items = [(args.id, params, library.certificate_library(args.id, **params))]
    else:
        items = library.all_library_proofs()
    ok = True
    for fid, params, proof in items:
        good, _ = proof.verify()
        ok &= good
        entry = {"id": fid, "params": params, "degree": proof.cert.degree, "h": repr(proof.h), "verified": good}
        if args.emit:
            Path(args.emit).mkdir(parents=True, exist_ok=True)
            tag = "_".join(f"{k}{v}" for k, v in params.items() if k != "lambdas") or "default"
            path = Path(args.emit) / f"{fid}_{tag}.json"
            path.write_text(json.dumps(proof.to_json(), indent=1))
            entry["file"] = str(path)
        entries.append(entry)
    return _emit(args, {"entries": entries}, ok)


def cmd_sos_pe(args):
    if args.cube:
        names = tuple(f"x{i}" for i in range(1, args.cube + 1))
        pts, w = acceptance.cube_distribution(args.cube, args.seed if args.weighted else None)
        pe = PseudoExpectation.from_distribution(names, args.degree, pts, w)
        A = interval_constraints(names)
    elif args.pe:
        d = _load_json(args.pe)
        pe = PseudoExpectation.from_json(d)
        A = ConstraintSet.from_json(d["constraints"]) if "constraints" in d else (
            interval_constraints(pe.variables) if args.box else unconstrained(pe.variables))
    else:
        raise UsageError("give a pseudo-expectation file or --cube N")
    rep = check_pseudo_expectation(pe, A, eq_tol=args.eq_tol, psd_tol=args.psd_tol)
    return _emit(args, {"degree": pe.degree, "variables": list(pe.variables),
                        "tolerances": {"eq": args.eq_tol, "psd": args.psd_tol}, **rep.to_json()}, rep.ok)


def _instance(args):
    if args.instance:
        try:
            return ug.load_instance(args.instance), None
        except (OSError, KeyError, json.JSONDecodeError) as e:
            raise UsageError(f"cannot read instance: {e}") from e
    if args.toy:
        parts = args.toy.split(":")
        kind = parts[0]
        nums = [int(p) for p in parts[1:]]
        n, k, seed = (nums + [4, 3, args.seed][len(nums):])[:3]
        return ug.toy_generators(kind, n, k, seed=seed)
    raise UsageError("give --instance FILE or --toy KIND[:n:k:seed]")


def cmd_reduce(args):
    inst, _ = _instance(args)
    if args.mode == "sampler":
        gen = ug.kkmo_reduce(inst, args.rho, "sampler", seed=args.seed)
        edges = [next(gen) for _ in range(args.count)]
        return _emit(args, {"mode": "sampler", "seed": args.seed,
                            "edges": [[v1, ug.signs(x1, inst.k), v2, ug.signs(x2, inst.k)]
                                      for (v1, x1), (v2, x2) in edges]}, True)
    mc = ug.kkmo_reduce(inst, args.rho, "exact")
    total = mc.total_weight()
    if args.csv:
        mc.write_csv(args.csv)
    return _emit(args, {"mode": "exact", "edges": len(mc.edges), "total_weight": str(total),
                        "vertices": inst.n_vertices * (1 << inst.k), "csv": args.csv}, total == 1)


def cmd_cut_value(args):
    inst, hidden = _instance(args)
    if args.cut:
        cut = ug.CutAssignment.from_json(_load_json(args.cut))
    elif args.dictator is not None or (args.cut_kind == "dictator"):
        lab = [int(v) for v in args.dictator.split(",")] if args.dictator else hidden
        if lab is None:
            raise UsageError("dictator cut needs --dictator LABELS or a perfect toy instance")
        cut = ug.dictator_cut(inst, lab)
    elif args.cut_kind == "constant":
        cut = ug.constant_cut(inst)
    else:
        cut = ug.random_cut(inst, seed=args.seed)
    mc = ug.kkmo_exact(inst, args.rho)
    direct = ug.cut_value_edges(mc, cut)
    via = ug.cut_value_stability(inst, args.rho, cut)
    return _emit(args, {"rho": str(args.rho), "direct": str(direct), "via_stability": str(via),
                        "value": float(direct)}, direct == via)


def cmd_bounds(args):
    rep = ug.bounds_report(args.rho)
    ok = rep["ordered_on_grid"] and rep["ordered_here"] is not False
    return _emit(args, rep, ok)


def cmd_suite(args):
    numbers = [int(x) for x in args.only.split(",")] if args.only else None
    results = []
    for k in numbers or sorted(acceptance.CRITERIA):
        r = acceptance.run(k)
        print(r.line(), file=sys.stderr)
        results.append(r)
    return _emit(args, {"criteria": [r.to_json() for r in results]}, all(r.ok for r in results))


# ---------------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="mistkit", description="Noise stability and SoS verification runs.")
    p.add_argument("--out", help="write the JSON report here instead of stdout")
    p.add_argument("--seed", type=int, default=0)
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        sp = sub.add_parser(name, help=help_)
        sp.set_defaults(func=fn)
        sp.add_argument("--out", default=argparse.SUPPRESS, help=argparse.SUPPRESS)
        sp.add_argument("--seed", type=int, default=argparse.SUPPRESS, help=argparse.SUPPRESS)
        return sp

    sp = add("fourier", cmd_fourier, "Fourier coefficients and influences")
    sp.add_argument("--f", required=True)

    sp = add("stab", cmd_stab, "two-sided noise stability")
    sp.add_argument("--maj", type=int)
    sp.add_argument("--f")
    sp.add_argument("--rho", type=_frac, required=True)

    sp = add("delta", cmd_delta, "Delta functional, both ways")
    sp.add_argument("--f", required=True)
    sp.add_argument("--sigma", type=_frac)

    sp = add("jgrid", cmd_jgrid, "J and its partials on a grid")
    sp.add_argument("--rho", type=float, required=True)
    sp.add_argument("--grid", type=int, default=9)
    sp.add_argument("--lo", type=float, default=0.1)
    sp.add_argument("--hi", type=float, default=0.9)
    sp.add_argument("--format", choices=("json", "csv"), default="json")

    sp = add("check-base", cmd_check_base, "two-point base case sweep")
    sp.add_argument("--rho", type=float, required=True)
    sp.add_argument("--eps", type=float, required=True)
    sp.add_argument("--trials", type=int, default=10_000)

    for name, fn in (("check-tensor", cmd_check_tensor),):
        sp = add(name, fn, "tensorized inequality on the cube")
        sp.add_argument("--f", required=True)
        sp.add_argument("--g")
        sp.add_argument("--rho", type=float, required=True)
        sp.add_argument("--eps", type=float)
        sp.add_argument("--smooth", type=_frac, nargs=2, metavar=("EPS", "ETA"))
        sp.add_argument("--C", type=float)
        sp.add_argument("--C-exp", dest="C_exp", type=float, default=0.0)

    sp = add("check-mist", cmd_check_mist, "majority is stablest inequality")
    sp.add_argument("--f", required=True)
    sp.add_argument("--rho", type=float, required=True)
    sp.add_argument("--C", type=float)

    sp = add("check-borell", cmd_check_borell, "Gaussian functional inequality, Monte Carlo")
    sp.add_argument("--rho", type=float, required=True)
    sp.add_argument("--m", type=int, default=200)
    sp.add_argument("--trials", type=int, default=100_000)
    sp.add_argument("--d", type=int, default=1)
    sp.add_argument("--eps", type=float, default=0.1)
    sp.add_argument("--scale", type=float, default=1.0)

    sp = add("approx-j", cmd_approx_j, "Bernstein approximation of J")
    sp.add_argument("--rho", type=float, required=True)
    sp.add_argument("--eps", type=float, default=0.1)
    sp.add_argument("--delta", type=float, default=0.01)
    sp.add_argument("--cap", type=int, default=4096)
    sp.add_argument("--save", help="write the approximation JSON here")

    sp = add("sos-verify", cmd_sos_verify, "exactly verify a certificate file")
    sp.add_argument("cert")

    sp = add("sos-search", cmd_sos_search, "search for a certificate or a pseudo-expectation")
    sp.add_argument("--problem")
    sp.add_argument("--h")
    sp.add_argument("--vars")
    sp.add_argument("--box", action="store_true", help="constrain every variable to [-1, 1]")
    sp.add_argument("--degree", type=int)
    sp.add_argument("--max-iter", dest="max_iter", type=int, default=500)
    sp.add_argument("--expect", choices=("any", "found", "infeasible"), default="any")

    sp = add("sos-library", cmd_sos_library, "verify the certificate library")
    sp.add_argument("--id", choices=sorted(library.LIBRARY))
    sp.add_argument("--params", help="JSON object of builder parameters")
    sp.add_argument("--emit", help="directory for certificate files")

    sp = add("sos-pe", cmd_sos_pe, "check a pseudo-expectation")
    sp.add_argument("pe", nargs="?")
    sp.add_argument("--cube", type=int)
    sp.add_argument("--weighted", action="store_true")
    sp.add_argument("--degree", type=int, default=4)
    sp.add_argument("--box", action="store_true")
    sp.add_argument("--eq-tol", dest="eq_tol", type=float, default=1e-10)
    sp.add_argument("--psd-tol", dest="psd_tol", type=float, default=1e-8)

    for name, fn, help_ in (("reduce", cmd_reduce, "noisy long-code reduction to Max-Cut"),
                            ("cut-value", cmd_cut_value, "cut value two ways")):
        sp = add(name, fn, help_)
        sp.add_argument("--instance")
        sp.add_argument("--toy", help="perfect|cycle-shift|random[:n:k:seed]")
        sp.add_argument("--rho", type=_frac, required=True)
    sub.choices["reduce"].add_argument("--mode", choices=("exact", "sampler"), default="exact")
    sub.choices["reduce"].add_argument("--count", type=int, default=10)
    sub.choices["reduce"].add_argument("--csv")
    cv = sub.choices["cut-value"]
    cv.add_argument("--cut")
    cv.add_argument("--dictator", help="comma separated labels")
    cv.add_argument("--cut-kind", dest="cut_kind", choices=("dictator", "constant", "random"), default="random")

    sp = add("bounds", cmd_bounds, "Max-Cut bound triple")
    sp.add_argument("--rho", type=float, required=True)

    sp = add("suite", cmd_suite, "run the acceptance battery")
    sp.add_argument("--only", help="comma separated criterion numbers")
    return p


_NEGATIVE = re.compile(r"^-(\d+(/\d+)?|\d*\.\d+)$")


def _join_negatives(argv):
    # argparse mistakes "--rho -1/2" for two options
    out = []
    for tok in argv:
        if out and out[-1].startswith("--") and "=" not in out[-1] and _NEGATIVE.match(tok):
            out[-1] = f"{out[-1]}={tok}"
        else:
            out.append(tok)
    return out


def main(argv=None):
    parser = build_parser()
    argv = _join_negatives(sys.argv[1:] if argv is None else list(argv))
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.func(args)
    except (UsageError, ValueError, KeyError, cf.ResourceError) as e:
        print(f"mistkit {args.command}: error: {e}", file=sys.stderr)
        return 2
    except AssertionError as e:
        print(json.dumps({"command": args.command, "ok": False, "assertion": str(e)}))
        return 1


if __name__ == "__main__":
    sys.exit(main())
