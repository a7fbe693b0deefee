"""Variable-count bounds G* and tilde-G* from a degree profile.

The general bounds take, for each level h, a mean-value plug-in for the
exponent set k_h = (exponents on levels <= h) and the threshold
k(1 + varpi_h)/2, where k is the largest exponent of the whole system.
Thresholds are kept as exact ``Fraction`` values.

Plug-ins come from a :class:`PluginRegistry`.  The defaults are

* v0 (full range):  k~(k~ - 1) for k~ >= 3, 2 for the single square,
  3 for the Vinogradov system (1, 2), 1 for (1);
* u0 (smooth range): ceil(H) with H = k~ w (log k~ + 3 log w), w = |k_h|,
  never below sum(k_h).  The true bound carries a (1 + o(1)) factor, so
  every u0 value is flagged asymptotic.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from .system_model import DegreeProfile, derive_profile, AdditiveSystem


@dataclass(frozen=True)
class MeanValuePlugin:
    kind: str                       # "u0" or "v0"
    exponents: tuple[int, ...]
    value: int
    source: str
    asymptotic: bool = False
    caveats: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind not in ("u0", "v0"):
            raise ValueError(f"plugin kind must be u0 or v0, not {self.kind!r}")
        if self.value < 1:
            raise ValueError("plugin value must be >= 1")


def _check_exponents(k_vec: Sequence[int]) -> tuple[int, ...]:
    k_vec = tuple(sorted(int(k) for k in k_vec))
    if not k_vec:
        raise ValueError("exponent vector is empty")
    if len(set(k_vec)) != len(k_vec):
        raise ValueError(f"exponents must be distinct: {k_vec}")
    if k_vec[0] < 1:
        raise ValueError(f"exponent < 1 in {k_vec}")
    return k_vec


def v0_estimate(k_vec: Sequence[int]) -> MeanValuePlugin:
    k_vec = _check_exponents(k_vec)
    kt = k_vec[-1]
    if kt >= 3:
        caveats = ()
        if len(k_vec) > 1 and k_vec != tuple(range(1, kt + 1)):
            caveats = (f"estimated trivially by the complete system v0(1..{kt})",)
        return MeanValuePlugin("v0", k_vec, kt * (kt - 1),
                               "Wooley, cubic case of Vinogradov's mean value theorem",
                               caveats=caveats)
    if k_vec == (2,):
        return MeanValuePlugin("v0", k_vec, 2, "Hua's lemma")
    if k_vec == (1,):
        return MeanValuePlugin("v0", k_vec, 1, "trivial (linear)")
    # (1, 2): quadratic Vinogradov system, critical exponent k(k+1)/2
    return MeanValuePlugin("v0", k_vec, 3, "Vinogradov mean value theorem, degree 2")


def hua_wooley_H(k_vec: Sequence[int]) -> float:
    k_vec = _check_exponents(k_vec)
    kt, w = k_vec[-1], len(k_vec)
    return kt * w * (math.log(kt) + 3 * math.log(w))


def u0_estimate(k_vec: Sequence[int]) -> MeanValuePlugin:
    k_vec = _check_exponents(k_vec)
    H = hua_wooley_H(k_vec)
    value = math.ceil(H)
    caveats = ["u0 <= (1+o(1))H: the o(1) term is not effective"]
    floor = sum(k_vec)
    if value < floor:
        # diagonal solutions alone give J >= P^u, so u0 >= k_1 + ... + k_w
        caveats.append(f"ceil(H) = {value} raised to the trivial floor {floor}")
        value = floor
    return MeanValuePlugin("u0", k_vec, max(value, 1), "Wooley (smooth Weyl sums), H(k)",
                           asymptotic=True, caveats=tuple(caveats))


class PluginRegistry:
    """Lookup of u0/v0 plug-ins by exponent set.

    Explicit entries (exact exponent set) take precedence over the default
    rules.  ``PluginRegistry.from_json`` reads a list of objects with keys
    ``kind``, ``exponents``, ``value`` and optional ``source``/``asymptotic``.
    """

    def __init__(self, entries: Iterable[MeanValuePlugin] = ()):
        self._rules: dict[str, Callable[[Sequence[int]], MeanValuePlugin]] = {
            "u0": u0_estimate, "v0": v0_estimate}
        self._table: dict[tuple[str, tuple[int, ...]], MeanValuePlugin] = {}
        for entry in entries:
            self.add(entry)

    def add(self, plugin: MeanValuePlugin) -> None:
        key = (plugin.kind, tuple(sorted(plugin.exponents)))
        self._table[key] = plugin

    def lookup(self, kind: str, k_vec: Sequence[int]) -> MeanValuePlugin:
        key = (kind, tuple(sorted(k_vec)))
        if key in self._table:
            return self._table[key]
        return self._rules[kind](k_vec)

    @classmethod
    def from_json(cls, text: str) -> "PluginRegistry":
        entries = []
        for obj in json.loads(text):
            entries.append(MeanValuePlugin(
                kind=obj["kind"], exponents=tuple(obj["exponents"]), value=int(obj["value"]),
                source=obj.get("source", "user registry"),
                asymptotic=bool(obj.get("asymptotic", False))))
        return cls(entries)


@dataclass(frozen=True)
class LevelBound:
    h: int
    exponents: tuple[int, ...]
    weight: int                     # mu_h - mu_{h+1}
    threshold: Fraction             # k (1 + varpi_h) / 2
    plugin: MeanValuePlugin
    s_value: Fraction               # max(plugin, threshold)


@dataclass
class BoundReport:
    formula_used: str
    G_star_upper: int | None = None
    tG_star_upper: int | None = None
    per_level_u0: list[LevelBound] = field(default_factory=list)
    per_level_v0: list[LevelBound] = field(default_factory=list)
    caveats: list[str] = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        def level(lb: LevelBound) -> dict:
            return {"h": lb.h + 1, "exponents": list(lb.exponents), "weight": lb.weight,
                    "threshold": str(lb.threshold), "plugin_value": lb.plugin.value,
                    "plugin_source": lb.plugin.source, "s": str(lb.s_value)}
        out = {"formula_used": self.formula_used,
               "G_star_upper": self.G_star_upper,
               "tG_star_upper": self.tG_star_upper,
               "per_level_u0": [level(lb) for lb in self.per_level_u0],
               "per_level_v0": [level(lb) for lb in self.per_level_v0],
               "caveats": list(self.caveats)}
        out.update(self.extra)
        return out


def _levels(prof: DegreeProfile, plugins: Sequence[MeanValuePlugin], round_up: bool):
    if len(plugins) != prof.t:
        raise ValueError(f"need {prof.t} plug-ins, got {len(plugins)}")
    levels = []
    for h, plugin in enumerate(plugins):
        k_h = tuple(sorted(prof.exponents_upto(h)))
        if tuple(sorted(plugin.exponents)) != k_h:
            raise ValueError(f"plug-in for level {h + 1} covers {plugin.exponents}, "
                             f"expected {k_h}")
        threshold = Fraction(prof.k * (1 + prof.varpi[h]), 2)
        s_val = max(Fraction(plugin.value), threshold)
        if round_up:
            s_val = Fraction(math.ceil(s_val))
        levels.append(LevelBound(h, k_h, prof.mu[h] - prof.mu_next(h), threshold, plugin, s_val))
    return levels


def _total(levels: Sequence[LevelBound]) -> Fraction:
    return 2 * sum((lb.weight * lb.s_value for lb in levels), Fraction(0))


def theorem1_bounds(prof: DegreeProfile, u0: Sequence[MeanValuePlugin] | None = None,
                    v0: Sequence[MeanValuePlugin] | None = None, *,
                    registry: PluginRegistry | None = None,
                    round_up: bool = False) -> BoundReport:
    """G* <= 2 sum_h (mu_h - mu_{h+1}) s(k_h) + M and the tilde-G* analogue (+1).

    Missing plug-in lists are filled from ``registry``.  With ``round_up`` the
    per-level maxima are rounded up to integers (integral block sizes u_h);
    otherwise the formula is evaluated exactly (twice a half-integer is an
    integer, so the totals are integral either way).
    """
    registry = registry or PluginRegistry()
    if u0 is None:
        u0 = [registry.lookup("u0", prof.exponents_upto(h)) for h in range(prof.t)]
    if v0 is None:
        v0 = [registry.lookup("v0", prof.exponents_upto(h)) for h in range(prof.t)]
    lu = _levels(prof, u0, round_up)
    lv = _levels(prof, v0, round_up)
    G = _total(lu) + prof.M
    tG = _total(lv) + 1
    caveats = []
    for plugin in u0:
        if plugin.asymptotic:
            caveats.append(f"u0{plugin.exponents} is asymptotic: {plugin.caveats[0]}")
            break
    for plugin in list(u0) + list(v0):
        caveats.extend(c for c in plugin.caveats if c.startswith("estimated trivially")
                       and c not in caveats)
    return BoundReport("theorem1", int(G), int(tG), lu, lv, caveats)


def corollary12_formula(prof: DegreeProfile) -> int:
    """Closed form for degrees >= 3 with v0 = k~(k~ - 1), computed directly."""
    k = prof.k
    total = Fraction(2 * prof.mu_min * k * (k - 1) + 1)
    for h in range(prof.t - 1):
        kt = prof.k_tilde[h]
        total += 2 * (prof.mu[h] - prof.mu[h + 1]) * max(Fraction(kt * (kt - 1)),
                                                         Fraction(k * (1 + prof.varpi[h]), 2))
    return math.ceil(total)


def _profile_of(degrees: Sequence[int]) -> DegreeProfile:
    # only the degree multiset matters for the profile
    return derive_profile(AdditiveSystem.from_rows(degrees, [[1]] * len(degrees)))


def kncor_bounds(k: int, n: int, registry: PluginRegistry | None = None) -> BoundReport:
    """All six bounds for degree patterns (k,k,n), (k,k,n,n), (k,n,n), k > n >= 2."""
    if not (k > n >= 2):
        raise ValueError(f"need k > n >= 2, got k={k}, n={n}")
    out = BoundReport("kncor")
    patterns = {"kkn": (k, k, n), "kknn": (k, k, n, n), "knn": (k, n, n)}
    for name, degrees in patterns.items():
        rep = theorem1_bounds(_profile_of(degrees), registry=registry)
        out.extra[f"tG_star_{name}"] = rep.tG_star_upper
        out.extra[f"G_star_{name}"] = rep.G_star_upper
    # printed closed forms, for comparison
    out.extra["printed_tG_star_kkn"] = 4 * k * (k - 1) + 1
    out.extra["printed_tG_star_kknn"] = 4 * k * (k - 1) + 1
    if k <= n * (n - 1):
        out.extra["printed_tG_star_knn"] = 2 * k * (k - 1) + 2 * n * (n - 1) + 1
        out.extra["knn_branch"] = "k <= n(n-1)"
    else:
        out.extra["printed_tG_star_knn"] = 2 * k * k + 1
        out.extra["knn_branch"] = "k >= n(n-1)"
    out.extra["asymptotic_G_star"] = {"kkn": "(6+o(1)) k log k", "kknn": "(8+o(1)) k log k",
                                      "knn": "(4+o(1)) k log k + 2 n log n"}
    out.tG_star_upper = out.extra["tG_star_kkn"]
    out.G_star_upper = out.extra["G_star_kkn"]
    out.caveats.append("G* values use u0 = ceil(H) without the (1+o(1)) factor")
    return out


def quadcub_bounds(r_Q: int, r_C: int) -> BoundReport:
    """Bounds for r_Q quadratic and r_C cubic equations."""
    if r_Q < 0 or r_C < 0:
        raise ValueError("equation counts must be non-negative")
    if r_Q + r_C == 0:
        raise ValueError("need at least one equation")
    branch_q = 4 * r_Q + (20 * r_C) // 3 + 1      # valid for r_Q >= r_C
    branch_c = 8 * r_C + (8 * r_Q) // 3 + 1       # valid for r_C >= r_Q
    extra = {}
    if r_Q > r_C:
        tG, used = branch_q, "quadcub.rQ_ge_rC"
    elif r_C > r_Q:
        tG, used = branch_c, "quadcub.rC_ge_rQ"
    else:
        if branch_q != branch_c:
            raise AssertionError(f"branch formulas disagree at r_Q = r_C = {r_Q}")
        tG, used = branch_q, "quadcub.equal"
        extra["branches_agree"] = True
    G = 7 * r_C + -(-(11 * r_Q) // 3) if r_C > r_Q else None
    return BoundReport(used, G, tG, extra=extra)
