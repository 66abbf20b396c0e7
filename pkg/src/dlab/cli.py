"""Command line entry point: ``dlab <command> ...``."""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from fractions import Fraction
from pathlib import Path

from . import dimension as dim
from . import error_functions as ef
from . import experiment as ex
from .cf_core import estimate_type, load_alpha
from .errors import DlabError
from .exact import decimal_string, default_precision, log_rational, parse_rational
from .rotation import gap_spectrum_bruteforce
from .target_sets import IntervalSet, Proxy, build_level

DIGITS = 30


def _writer(out):
    return csv.writer(out, lineterminator="\n")


def _rat(text: str) -> Fraction:
    try:
        return parse_rational(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a rational: {text!r}") from exc


def _log10(x: Fraction) -> str:
    return f"{log_rational(x) / math.log(10):.12g}" if x > 0 else ""


# -- commands -------------------------------------------------------------------


def cmd_cf(args, out) -> int:
    cf = load_alpha(args.alpha)
    w = _writer(out)
    w.writerow(["n", "a_n", "p_n", "q_n"])
    for n in range(args.depth + 1):
        w.writerow([n, cf.quotient(n), cf.p(n), cf.q(n)])
    if args.type:
        est = estimate_type(cf, args.depth)
        print(f"# beta_hat={est.beta_hat:.6f} window={est.window[0]}..{est.window[1]}", file=sys.stderr)
    return 0


def cmd_gaps(args, out) -> int:
    cf = load_alpha(args.alpha)
    spec = gap_spectrum_bruteforce(cf, (args.first, args.last), args.precision)
    w = _writer(out)
    w.writerow(["gap_length_lo", "gap_length_hi", "multiplicity"])
    for g in spec.distinct_gaps:
        w.writerow([decimal_string(g.lo, DIGITS), decimal_string(g.hi, DIGITS), g.multiplicity])
    return 0


def _parse_levels(items: list[str]) -> list[tuple[int, int, int]]:
    levels, prev = [], 0
    for item in items:
        parts = [int(x) for x in item.split(",")]
        if len(parts) == 2:
            n, m = parts
        elif len(parts) == 3:
            n, prev, m = parts
        else:
            raise argparse.ArgumentTypeError(f"level must be n,m or n,m_prev,m: {item!r}")
        levels.append((n, prev, m))
        prev = m
    return levels


def cmd_levels(args, out) -> int:
    cf = load_alpha(args.alpha)
    levels = _parse_levels(args.level)
    proxy = Proxy.for_range(cf, max(m for _, _, m in levels), args.precision)
    w = _writer(out)
    w.writerow(["i", "n_i", "m_i", "q_ni", "case_tag", "predicted_count", "actual_count", "log10_y_or_z", "log10_c_i", "log10_d_i"])
    built = []
    for i, level in enumerate(levels, start=1):
        arcs, g = build_level(cf, level, args.K, proxy=proxy, method=args.method)
        built.append(arcs)
        w.writerow([i, g.n_i, g.m_i, g.q, g.case_tag, g.predicted_count, arcs.component_count,
                    _log10(g.predicted_length), _log10(g.c), _log10(g.d) if g.d is not None else ""])
    if args.arcs_json:
        target = built[-1]
        if args.nested:
            from .target_sets import intersect_levels

            target = intersect_levels(built)
        Path(args.arcs_json).write_text(json.dumps(arcs_to_json(target), indent=1) + "\n")
    return 0


def arcs_to_json(s: IntervalSet) -> dict:
    return {
        "arcs": [[decimal_string(lo, DIGITS), decimal_string(hi, DIGITS)] for lo, hi in s.fractions()],
        "exact": {"den": str(s.den), "arcs": [[str(lo), str(hi)] for lo, hi in s.arcs]},
    }


def arcs_from_json(obj: dict) -> IntervalSet:
    ex_ = obj["exact"]
    return IntervalSet.from_raw(int(ex_["den"]), [(int(a), int(b)) for a, b in ex_["arcs"]])


def cmd_phi(args, out) -> int:
    spec = json.loads(args.spec)
    cf = load_alpha(args.alpha) if args.alpha else None
    phi = ef.from_spec(spec, alpha=cf)
    ns = range(args.n_min, args.n_max + 1) if args.all else ef.geometric_grid(args.n_min, args.n_max, args.points)
    w = _writer(out)
    w.writerow(["n", "phi_lo", "phi_hi", "ratio"])
    for n in ns:
        lo, hi = phi.enclosure(n)
        ratio = f"{phi.log_ratio(n):.12g}" if n > 1 and hi < 1 else ""
        w.writerow([n, decimal_string(lo, DIGITS), decimal_string(hi, DIGITS), ratio])
    plateaus = phi.edge_plateaus(args.n_max)
    if plateaus:
        print(f"# weak-monotone plateaus at band edges: {plateaus[:10]}", file=sys.stderr)
    return 0


def cmd_formula(args, out) -> int:
    res: dict = {}
    if args.N is not None or args.B is not None or args.K is not None:
        if None in (args.N, args.B, args.K):
            raise DlabError("S needs --N, --B and --K")
        res["S"] = str(dim.S_formula(args.N, args.B, args.K))
        res["S_piecewise"] = str(dim.S_piecewise(args.N, args.B, args.K))
    if args.u is not None and args.beta is not None:
        l = args.l if args.l is not None else Fraction(0)
        res["theorem2_bound"] = str(dim.theorem2_lower_bound(args.u, l, args.beta))
        res["N0"] = str(dim.landscape_n0(args.u, args.beta))
        n_star, val = dim.landscape_min(args.u, args.beta)
        res["landscape_min"] = {"N_star": n_star, "value": val}
    if not res:
        raise DlabError("nothing to evaluate; pass --N --B --K and/or --u --beta")
    out.write(json.dumps(res, indent=2, sort_keys=True) + "\n")
    return 0


def cmd_boxdim(args, out) -> int:
    s = arcs_from_json(json.loads(Path(args.arcs).read_text()))
    if args.scales:
        scales = [parse_rational(x) for x in args.scales.split(",")]
    else:
        shortest = s.shortest_length()
        k_max = max(1, int(-log_rational(shortest) / math.log(2)))
        scales = [Fraction(1, 2**k) for k in range(1, k_max + 1)]
    rep = dim.box_count(s, scales)
    w = _writer(out)
    w.writerow(["scale", "count"])
    for d, c in rep.rows():
        w.writerow([decimal_string(d, DIGITS), c])
    print(f"# slope={rep.slope_fit[0]:.6f} stderr={rep.slope_fit[1]:.6f}", file=sys.stderr)
    return 0


def cmd_verify(args, out) -> int:
    from .verify import SUITES, run_suites

    names = args.suite or None
    if names:
        unknown = set(names) - set(SUITES)
        if unknown:
            raise DlabError(f"unknown suites {sorted(unknown)}")
    results = run_suites(names, quick=args.quick)
    for name, ok, detail in results:
        out.write(f"{'PASS' if ok else 'FAIL'} {name}: {detail}\n")
    return 0 if all(ok for _, ok, _ in results) else 1


def cmd_run(args, out) -> int:
    target = args.target
    if target in ex.PRESETS:
        cfg = ex.preset(target)
    else:
        cfg = ex.ExperimentConfig.from_file(target)
    report = ex.run_experiment(cfg)
    text = ex.emit(report, args.format, args.out)
    if args.out in (None, "-"):
        out.write(text)
    for a in report["assertions"]:
        print(f"{a['status']:>4} {a['name']}: {a['detail']}", file=sys.stderr)
    return 0 if report["hard_ok"] else 1


# -- parser ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dlab", description="Exact experiments on inhomogeneous approximation sets of irrational rotations.")
    sub = p.add_subparsers(dest="command", required=True)
    prec = default_precision()

    s = sub.add_parser("cf", help="partial quotients and convergents")
    s.add_argument("alpha", help="golden | sqrt2 | e | JSON quotient list | JSON growth object")
    s.add_argument("--depth", type=int, default=12)
    s.add_argument("--type", action="store_true", help="also print the Diophantine type estimate")
    s.set_defaults(func=cmd_cf)

    s = sub.add_parser("gaps", help="distinct gaps of an orbit segment")
    s.add_argument("alpha")
    s.add_argument("--first", type=int, default=1)
    s.add_argument("--last", type=int, required=True)
    s.add_argument("--precision", type=int, default=prec)
    s.set_defaults(func=cmd_gaps)

    s = sub.add_parser("levels", help="build level sets E_i")
    s.add_argument("alpha")
    s.add_argument("--level", action="append", required=True, help="n_i,m_i or n_i,m_prev,m_i (repeatable)")
    s.add_argument("--K", type=_rat, required=True)
    s.add_argument("--method", choices=["groups", "bruteforce"], default="groups")
    s.add_argument("--precision", type=int, default=prec)
    s.add_argument("--arcs-json", help="write the last level (or the nested set) as arcs JSON")
    s.add_argument("--nested", action="store_true", help="write F_j instead of E_j")
    s.set_defaults(func=cmd_levels)

    s = sub.add_parser("phi", help="evaluate an error function")
    s.add_argument("spec", help='family JSON, e.g. \'{"family":"thm5","l":"1/3","u":"1/2"}\'')
    s.add_argument("--alpha", help="alpha for families bound to its denominators")
    s.add_argument("--n-min", type=int, default=1)
    s.add_argument("--n-max", type=int, default=1000)
    s.add_argument("--points", type=int, default=50)
    s.add_argument("--all", action="store_true", help="every n instead of a geometric grid")
    s.set_defaults(func=cmd_phi)

    s = sub.add_parser("formula", help="S(N,B,K), the lower bound and the N-landscape")
    for flag in ("N", "B", "K", "u", "l", "beta"):
        s.add_argument(f"--{flag}", type=_rat)
    s.set_defaults(func=cmd_formula)

    s = sub.add_parser("boxdim", help="box counts of an arcs JSON file")
    s.add_argument("arcs")
    s.add_argument("--scales", help="comma-separated rationals; default dyadic down to the resolution")
    s.set_defaults(func=cmd_boxdim)

    s = sub.add_parser("verify", help="run the invariant suites")
    s.add_argument("--suite", action="append")
    s.add_argument("--quick", action="store_true")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("run", help="run a preset or a config file")
    s.add_argument("target", help=f"preset ({', '.join(ex.PRESETS)}) or config JSON path")
    s.add_argument("--format", choices=["json", "csv"], default="json")
    s.add_argument("--out", help="output path (default stdout)")
    s.set_defaults(func=cmd_run)
    return p


def main(argv: list[str] | None = None, out=None) -> int:
    args = build_parser().parse_args(argv)
    out = out or sys.stdout
    try:
        return args.func(args, out)
    except DlabError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
