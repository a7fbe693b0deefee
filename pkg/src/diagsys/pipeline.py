"""End-to-end verification: profile, gate, bounds, counts, densities, ratios."""

from __future__ import annotations

import csv
import io
import json
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

from .bounds import quadcub_bounds, theorem1_bounds
from .counting import CountCache, RangeSpec, count_solutions
from .densities import DepthPolicy, density_report
from .system_model import (AdditiveSystem, NonSingularityReport, check_highly_nonsingular,
                           derive_profile, load_system)


class NonSingularityError(RuntimeError):
    def __init__(self, report: NonSingularityReport):
        super().__init__(f"system is not highly non-singular; witness {report.witness}")
        self.report = report


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass(frozen=True)
class VerifyPlan:
    system_path: str
    P_ladder: tuple[int, ...]
    range_kind: str = "full"
    eta: float = 0.25
    prime_bound: int = 97
    depth: DepthPolicy = DepthPolicy()
    chi_method: str = "volume"
    chi_samples: int = 8_000_000
    fmt: str = "json"
    seed: int = 0
    force: bool = False
    threads: int = 1
    cache_dir: str | None = None

    def __post_init__(self):
        ladder = tuple(int(P) for P in self.P_ladder)
        object.__setattr__(self, "P_ladder", ladder)
        if any(b <= a for a, b in zip(ladder, ladder[1:])):
            raise ValueError("P ladder must be strictly increasing")
        if any(P < 1 for P in ladder):
            raise ValueError("ladder entries must be positive")
        if self.prime_bound < 2 or self.chi_samples <= 0 or self.threads < 1:
            raise ValueError("budgets must be positive")
        if self.range_kind not in ("full", "smooth", "dyadic"):
            raise ValueError(f"unknown range kind {self.range_kind!r}")


@dataclass
class VerifyReport:
    system_digest: str
    profile: dict
    nonsingularity: dict
    bounds: dict
    s_minus_K: int
    counts: list[dict]
    C: float | None
    C_rel_err: float | None
    chi_inf: dict | None
    locals: list[dict]
    series: dict | None
    convergence: dict | None
    caveats: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "VerifyReport":
        return cls(**data)


def profile_summary(system: AdditiveSystem) -> dict:
    prof = derive_profile(system)
    return {"s": system.s, "r": system.r, "degrees": list(system.degrees), "t": prof.t,
            "mu": list(prof.mu), "nu": list(prof.nu),
            "k_table": [list(row) for row in prof.k_table], "K": prof.K, "M": prof.M,
            "varpi": list(prof.varpi), "k_tilde": list(prof.k_tilde), "k": prof.k}


def _bounds_summary(system: AdditiveSystem) -> dict:
    prof = derive_profile(system)
    rep = theorem1_bounds(prof)
    out = {"theorem1": {"G_star_upper": rep.G_star_upper, "tG_star_upper": rep.tG_star_upper,
                        "caveats": list(rep.caveats)}}
    if set(system.degrees) <= {2, 3}:
        qc = quadcub_bounds(system.degrees.count(2), system.degrees.count(3))
        out["quadcub"] = {"formula": qc.formula_used, "G_star_upper": qc.G_star_upper,
                          "tG_star_upper": qc.tG_star_upper}
    return out


def _persist(plan: VerifyPlan, digest: str, partial: dict) -> None:
    if plan.cache_dir is None:
        return
    path = Path(plan.cache_dir)
    path.mkdir(parents=True, exist_ok=True)
    (path / f"verify-{digest}.partial.json").write_text(json.dumps(partial, sort_keys=True))


def run_verify(plan: VerifyPlan, system: AdditiveSystem | None = None) -> VerifyReport:
    """Run every stage; a stage failure is re-raised as StageError naming it."""
    partial: dict = {}
    stage = "parse"
    try:
        system = system if system is not None else load_system(plan.system_path)
        digest = system.digest()
        stage = "profile"
        partial["profile"] = profile_summary(system)
        prof = derive_profile(system)
        s_minus_K = system.s - prof.K
        caveats: list[str] = []
        if s_minus_K <= 1:
            msg = f"s - K = {s_minus_K}: slow convergence expected"
            warnings.warn(msg)
            caveats.append(msg)

        stage = "nonsingularity"
        ns = check_highly_nonsingular(system, prof)
        partial["nonsingularity"] = ns.as_dict()
        if not ns.holds:
            if not plan.force:
                _persist(plan, digest, partial)
                raise NonSingularityError(ns)
            caveats.append("forced past a failed highly non-singular check")

        stage = "bounds"
        partial["bounds"] = _bounds_summary(system)

        stage = "counts"
        cache = CountCache(plan.cache_dir) if plan.cache_dir else CountCache.from_env()
        counts = []
        for P in plan.P_ladder:
            rng = RangeSpec(plan.range_kind, P, plan.eta if plan.range_kind == "smooth" else None)
            res = count_solutions(system, rng, "mitm", cache=cache)
            counts.append({"P": P, "N": res.count, "ratio": res.count / P ** s_minus_K,
                           "method": res.method, "seconds": res.wall_time})
            partial["counts"] = counts
            _persist(plan, digest, partial)
        if plan.range_kind != "full":
            caveats.append("C refers to the full range; ratios over other ranges are not compared")

        stage = "densities"
        dens = density_report(system, plan.prime_bound, plan.depth, plan.chi_method,
                              plan.threads, plan.seed,
                              **({"samples": plan.chi_samples} if plan.chi_method == "volume" else {}))
        dd = dens.as_dict()
        if dens.series.provisional:
            caveats.append("singular series provisional: some local factors not stabilized")
        if dens.chi_inf.unstable:
            caveats.append("chi_inf ladder unstable")

        convergence = None
        if counts and plan.range_kind == "full" and dens.C:
            last = counts[-1]["ratio"]
            convergence = {"last_ratio": last, "C": dens.C,
                           "relative_deviation": abs(last - dens.C) / abs(dens.C)}
    except NonSingularityError:
        raise
    except Exception as exc:
        if system is not None:
            _persist(plan, system.digest(), partial)
        raise StageError(stage, exc) from exc

    report = VerifyReport(
        system_digest=digest, profile=partial["profile"], nonsingularity=partial["nonsingularity"],
        bounds=partial["bounds"], s_minus_K=s_minus_K, counts=counts, C=dens.C,
        C_rel_err=dens.C_rel_err, chi_inf=dd["chi_inf"],
        locals=[{"p": f["p"], "depth": f["depth"], "chi": f["chi_float"],
                 "stabilized": f["stabilized"]} for f in dd["locals"]],
        series=dd["series"], convergence=convergence, caveats=caveats)
    _persist(plan, digest, report.as_dict())
    return report


# -- emission ------------------------------------------------------------------

COUNT_COLUMNS = ("P", "N", "ratio", "method", "seconds")


def emit_report(report: VerifyReport, fmt: str = "json") -> str:
    if fmt == "json":
        return json.dumps(report.as_dict(), indent=2, sort_keys=True)
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=COUNT_COLUMNS, lineterminator="\n")
        w.writeheader()
        for row in report.counts:
            w.writerow({k: row.get(k) for k in COUNT_COLUMNS})
        return buf.getvalue()
    if fmt == "text":
        return render_text(report)
    raise ValueError(f"unknown format {fmt!r}")


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def text_table(rows: Sequence[dict], columns: Sequence[str], width: int = 100) -> str:
    cells = [[_fmt(r.get(c, "")) for c in columns] for r in rows]
    widths = [max([len(c)] + [len(row[i]) for row in cells]) for i, c in enumerate(columns)]
    lines = ["  ".join(c.rjust(w) for c, w in zip(columns, widths))]
    lines += ["  ".join(v.rjust(w) for v, w in zip(row, widths)) for row in cells]
    return "\n".join(line[:width] for line in lines)


def render_text(report: VerifyReport, width: int = 100) -> str:
    p = report.profile
    head = [
        f"system {report.system_digest}  s={p['s']} r={p['r']} degrees={p['degrees']}",
        f"K={p['K']}  s-K={report.s_minus_K}  highly non-singular: {report.nonsingularity['holds']}",
    ]
    if report.C is not None:
        head.append(f"C = {report.C:.6g}  (relative error budget {report.C_rel_err:.3g})")
    if report.convergence:
        head.append(f"last ratio / C deviation: {report.convergence['relative_deviation']:.4g}")
    body = text_table(report.counts, ("P", "N", "ratio", "seconds"), width).splitlines()
    tail = [f"caveat: {c}" for c in report.caveats]
    return "\n".join(line[:width] for line in head + body + tail) + "\n"
