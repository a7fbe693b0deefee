"""Command line front end.

Exit codes: 0 ok, 2 invalid input, 3 budget exceeded, 4 non-singularity failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

from . import bounds as bd
from .counting import CountCache, RangeSpec, count_solutions, mean_value_J, slope_estimate
from .densities import DepthPolicy, chi_inf, singular_series
from .expsums import ArcParams, f_eval, sqa_bound_scan, weyl_diagnostic
from .pipeline import (NonSingularityError, StageError, VerifyPlan, emit_report, profile_summary,
                       run_verify, text_table)
from .system_model import (BudgetExceeded, SystemFormatError, check_highly_nonsingular,
                           derive_profile, load_system)

EXIT_OK, EXIT_INPUT, EXIT_BUDGET, EXIT_NONSINGULAR = 0, 2, 3, 4


def _ints(text: str) -> list[int]:
    return [int(t) for t in text.replace(" ", "").split(",") if t]


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.replace(" ", "").split(",") if t]


def _emit(obj, fmt: str, out) -> None:
    """dict -> one JSON document / key,value csv / aligned text; list of dicts -> rows."""
    rows = obj if isinstance(obj, list) else None
    if fmt == "json":
        if rows is not None:
            for row in rows:
                out.write(json.dumps(row, sort_keys=True) + "\n")
        else:
            out.write(json.dumps(obj, indent=2, sort_keys=True, default=str) + "\n")
        return
    if fmt == "csv":
        buf = io.StringIO()
        if rows is not None:
            cols = list(rows[0]) if rows else []
            w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
            w.writeheader()
            w.writerows(rows)
        else:
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(["key", "value"])
            for k, v in obj.items():
                w.writerow([k, json.dumps(v, default=str) if isinstance(v, (dict, list)) else v])
        out.write(buf.getvalue())
        return
    if rows is not None:
        out.write(text_table(rows, list(rows[0]) if rows else []) + "\n")
    else:
        width = max((len(k) for k in obj), default=0)
        for k, v in obj.items():
            out.write(f"{k.ljust(width)}  {json.dumps(v, default=str)}"[:100] + "\n")


def _range(args) -> RangeSpec:
    eta = args.eta if args.range == "smooth" else None
    return RangeSpec(args.range, args.P, eta)


def _cache(args) -> CountCache | None:
    return CountCache(args.cache_dir) if args.cache_dir else CountCache.from_env()


# -- subcommands ----------------------------------------------------------------

def cmd_check(args, out):
    system = load_system(args.system)
    rep = check_highly_nonsingular(system, mode=args.mode, seed=args.seed, trials=args.trials)
    _emit(rep.as_dict(), args.format, out)
    return EXIT_OK if rep.holds else EXIT_NONSINGULAR


def cmd_profile(args, out):
    _emit(profile_summary(load_system(args.system)), args.format, out)
    return EXIT_OK


def _level_rows(rep: bd.BoundReport) -> list[dict]:
    rows = []
    for kind, levels in (("u0", rep.per_level_u0), ("v0", rep.per_level_v0)):
        for lv in levels:
            rows.append({"kind": kind, "h": lv.h, "exponents": " ".join(map(str, lv.exponents)),
                         "plugin": lv.plugin.value, "half_k_1_varpi": str(lv.threshold),
                         "s_value": str(lv.s_value)})
    return rows


def cmd_bounds(args, out):
    registry = None
    if args.plugin_registry:
        registry = bd.PluginRegistry.from_json(Path(args.plugin_registry).read_text())
    if args.kn:
        k, n = _ints(args.kn)
        rep = bd.kncor_bounds(k, n, registry)
    elif args.quadcub:
        rq, rc = _ints(args.quadcub)
        rep = bd.quadcub_bounds(rq, rc)
    else:
        if not args.system:
            raise ValueError("bounds needs --system, --kn or --quadcub")
        prof = derive_profile(load_system(args.system))
        rep = bd.theorem1_bounds(prof, registry=registry, round_up=args.round_up)
    if args.format == "csv":
        _emit(_level_rows(rep) or [{"formula": rep.formula_used, "G_star_upper": rep.G_star_upper,
                                    "tG_star_upper": rep.tG_star_upper}], "csv", out)
    else:
        _emit(rep.as_dict(), args.format, out)
    return EXIT_OK


def cmd_count(args, out):
    system = load_system(args.system)
    res = count_solutions(system, _range(args), args.method, cache=_cache(args))
    _emit([res.as_record()], args.format, out)
    return EXIT_OK


def cmd_meanvalue(args, out):
    k_vec = _ints(args.degrees)
    rows = []
    for P in _ints(args.P_list):
        rng = RangeSpec(args.range, P, args.eta if args.range == "smooth" else None)
        res = mean_value_J(args.u, k_vec, rng, cache=_cache(args))
        rows.append(res.as_record())
    if len(rows) >= 3 and all(r["count"] > 0 for r in rows):
        fit = slope_estimate([(r["P"], r["count"]) for r in rows])
        sys.stderr.write(f"slope {fit.slope:.4f} (residual {fit.residual:.3g})\n")
    _emit(rows, args.format, out)
    return EXIT_OK


def cmd_arcs(args, out):
    system = load_system(args.system)
    arcs = ArcParams(args.X, args.P, args.Q, args.sigma)
    rep = weyl_diagnostic(system, arcs, args.samples, seed=args.seed, sigma=args.sigma)
    if args.csv_out:
        with open(args.csv_out, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"alpha_{i + 1}" for i in range(system.r)] + ["abs_f"])
            w.writerows(rep.rows)
    summary = {"samples": rep.samples, "sigma": rep.sigma, "max_stat": rep.max_stat,
               "mean_stat": rep.mean_stat, "argmax_alpha": rep.argmax_alpha,
               "quadcub_stat": rep.quadcub_stat, "rejected": rep.rejected}
    _emit(summary, args.format, out)
    return EXIT_OK


def cmd_expsum(args, out):
    k_vec = _ints(args.degrees)
    if args.sqa_scan:
        scan = sqa_bound_scan(args.sqa_scan, k_vec)
        _emit({"max_ratio": scan.max_ratio, "argmax": scan.argmax, "q_max": scan.q_max},
              args.format, out)
        return EXIT_OK
    gamma = _floats(args.gamma)
    val = f_eval(gamma, k_vec, _range(args))
    _emit({"gamma": gamma, "degrees": k_vec, "P": args.P, "real": val.real, "imag": val.imag,
           "abs": abs(val)}, args.format, out)
    return EXIT_OK


def cmd_series(args, out):
    system = load_system(args.system)
    policy = DepthPolicy(max_depth=args.depth)
    rep = singular_series(system, args.prime_bound, policy, threads=args.threads, seed=args.seed)
    rows = [f.as_dict() for f in rep.factors]
    if args.format == "json":
        _emit({"product": rep.product_decimal(), "provisional": rep.provisional,
               "tail_note": rep.tail_note, "prime_bound": rep.prime_bound,
               "locals": rows}, "json", out)
    else:
        _emit([{k: r[k] for k in ("p", "depth", "chi_float", "stabilized", "hensel_certified")}
               for r in rows], args.format, out)
    return EXIT_OK


def cmd_integral(args, out):
    system = load_system(args.system)
    kw = {"samples": args.samples, "seed": args.seed} if args.method == "volume" else {}
    res = chi_inf(system, args.method, **kw)
    _emit({"method": res.method, "value": res.value, "stat_err": res.stat_err,
           "extrap_err": res.extrap_err, "unstable": res.unstable,
           "ladder": res.ladder, "real_witness": res.witness}, args.format, out)
    return EXIT_OK


def cmd_verify(args, out):
    plan = VerifyPlan(args.system, tuple(_ints(args.P_list)), args.range, args.eta,
                      args.prime_bound, DepthPolicy(max_depth=args.depth), args.method,
                      args.samples, args.format, args.seed, args.force, args.threads,
                      args.cache_dir)
    try:
        report = run_verify(plan)
    except NonSingularityError as exc:
        _emit({"error": "not highly non-singular", "witness": exc.report.witness},
              "json" if args.format == "json" else "text", out)
        return EXIT_NONSINGULAR
    out.write(emit_report(report, args.format))
    if args.format != "csv":
        out.write("\n")
    return EXIT_OK


# -- parser -------------------------------------------------------------------

def _global_flags(p: argparse.ArgumentParser, suppress: bool) -> None:
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--format", choices=("json", "csv", "text"), default=d("json"))
    p.add_argument("--cache-dir", default=d(os.environ.get("DIAGSYS_CACHE_DIR")))
    p.add_argument("--seed", type=int, default=d(0))
    p.add_argument("--threads", type=int, default=d(1))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="diagsys", description=__doc__.splitlines()[0])
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_text):
        p = sub.add_parser(name, help=help_text)
        _global_flags(p, suppress=True)
        p.set_defaults(func=fn)
        return p

    def range_flags(p, need_P=True):
        if need_P:
            p.add_argument("--P", type=int, required=True)
        p.add_argument("--range", choices=("full", "smooth", "dyadic"), default="full")
        p.add_argument("--eta", type=float, default=0.25)

    p = add("check", cmd_check, "test the highly non-singular condition")
    p.add_argument("--system", required=True)
    p.add_argument("--mode", choices=("exhaustive", "randomized"), default="exhaustive")
    p.add_argument("--trials", type=int, default=1000)

    p = add("profile", cmd_profile, "print the degree profile")
    p.add_argument("--system", required=True)

    p = add("bounds", cmd_bounds, "variable-count bounds")
    p.add_argument("--system")
    p.add_argument("--plugin-registry")
    p.add_argument("--round-up", action="store_true")
    p.add_argument("--kn", help="k,n for the (k,k,n)/(k,k,n,n)/(k,n,n) family")
    p.add_argument("--quadcub", help="r_Q,r_C")

    p = add("count", cmd_count, "count solutions in a box")
    p.add_argument("--system", required=True)
    range_flags(p)
    p.add_argument("--method", choices=("brute", "mitm"), default="mitm")

    p = add("meanvalue", cmd_meanvalue, "mean values J_{u,k}")
    p.add_argument("--u", type=int, required=True)
    p.add_argument("--degrees", required=True)
    p.add_argument("--P-list", dest="P_list", required=True)
    range_flags(p, need_P=False)

    p = add("arcs", cmd_arcs, "minor-arc Weyl diagnostic")
    p.add_argument("--system", required=True)
    p.add_argument("--P", type=int, required=True)
    p.add_argument("--X", type=float, required=True)
    p.add_argument("--Q", type=float)
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--sigma", type=float)
    p.add_argument("--csv-out", help="write sampled (alpha, |f|) rows")

    p = add("expsum", cmd_expsum, "evaluate a Weyl sum or scan complete sums")
    p.add_argument("--gamma", default="0")
    p.add_argument("--degrees", required=True)
    range_flags(p, need_P=False)
    p.add_argument("--P", type=int, default=100)
    p.add_argument("--sqa-scan", type=int, metavar="Q_MAX")

    p = add("series", cmd_series, "truncated singular series")
    p.add_argument("--system", required=True)
    p.add_argument("--prime-bound", type=int, default=97)
    p.add_argument("--depth", type=int, default=6)

    p = add("integral", cmd_integral, "real density chi_inf")
    p.add_argument("--system", required=True)
    p.add_argument("--method", choices=("volume", "fourier"), default="volume")
    p.add_argument("--samples", type=int, default=8_000_000)

    p = add("verify", cmd_verify, "full pipeline")
    p.add_argument("--system", required=True)
    p.add_argument("--P-list", dest="P_list", required=True)
    p.add_argument("--range", choices=("full", "smooth", "dyadic"), default="full")
    p.add_argument("--eta", type=float, default=0.25)
    p.add_argument("--prime-bound", type=int, default=97)
    p.add_argument("--depth", type=int, default=6)
    p.add_argument("--method", choices=("volume", "fourier"), default="volume")
    p.add_argument("--samples", type=int, default=8_000_000)
    p.add_argument("--force", action="store_true")
    return parser


def main(argv=None, out=None) -> int:
    out = out if out is not None else sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_INPUT
    try:
        return args.func(args, out)
    except StageError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return _code_for(exc.cause) or 1
    except Exception as exc:                      # noqa: BLE001 - mapped to exit codes
        code = _code_for(exc)
        if code is None:
            raise
        sys.stderr.write(f"error: {exc}\n")
        return code


def _code_for(exc: BaseException):
    if isinstance(exc, BudgetExceeded):
        return EXIT_BUDGET
    if isinstance(exc, NonSingularityError):
        return EXIT_NONSINGULAR
    if isinstance(exc, (SystemFormatError, ValueError, FileNotFoundError, KeyError)):
        return EXIT_INPUT
    return None


if __name__ == "__main__":
    sys.exit(main())
