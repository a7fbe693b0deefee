"""Exact solution counts for diagonal systems over full, smooth and dyadic ranges.

Two independent routes are provided:

* ``brute``: direct evaluation of every tuple (vectorised over the trailing
  variables, no hashing);
* ``mitm``: meet in the middle.  Each half of the variables is folded into a
  table {partial value vector: multiplicity}; the count is the sum over
  matching keys of left(v) * right(-v).

int64 arithmetic is used only after checking that no partial sum or
multiplicity can leave the int64 range; otherwise both routes fall back to
Python integers.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import math
import os
import time
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .system_model import AdditiveSystem, BudgetExceeded, DegreeProfile, derive_profile

INT64_SAFE = 2 ** 62
CACHE_ENV = "DIAGSYS_CACHE_DIR"


# -- ranges -----------------------------------------------------------------

@dataclass(frozen=True)
class RangeSpec:
    """``full`` = [1, P], ``smooth`` = R-smooth numbers in [1, P] with
    R = floor(P**eta), ``dyadic`` = (P/2, P]."""

    kind: str = "full"
    P: int = 1
    eta: float | None = None

    def __post_init__(self):
        if self.kind not in ("full", "smooth", "dyadic"):
            raise ValueError(f"unknown range kind {self.kind!r}")
        if self.P < 1:
            raise ValueError("P must be >= 1")
        if self.kind == "smooth":
            if self.eta is None or not (0 < self.eta <= 1):
                raise ValueError("smooth ranges need 0 < eta <= 1")

    @property
    def R(self) -> int | None:
        if self.kind != "smooth":
            return None
        return smoothness_bound(self.P, self.eta)

    def key(self) -> dict:
        return {"kind": self.kind, "P": self.P, "eta": self.eta}


def smoothness_bound(P: int, eta: float) -> int:
    """floor(P**eta); the slack absorbs rounding when P**eta is an integer."""
    return max(int(math.floor(P ** eta * (1 + 1e-12))), 1)


def _primes_upto(n: int) -> np.ndarray:
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    sieve = np.ones(n + 1, dtype=bool)
    sieve[:2] = False
    for p in range(2, math.isqrt(n) + 1):
        if sieve[p]:
            sieve[p * p :: p] = False
    return np.nonzero(sieve)[0]


def largest_prime_factor_table(n: int) -> np.ndarray:
    """lpf[m] = largest prime factor of m (lpf[0] = lpf[1] = 1)."""
    lpf = np.ones(n + 1, dtype=np.int64)
    for p in _primes_upto(n):
        lpf[p::p] = p
    return lpf


def enumerate_range(rng: RangeSpec, budget: int = 50_000_000) -> np.ndarray:
    if rng.P > budget:
        raise BudgetExceeded(f"range size {rng.P} exceeds budget {budget}")
    if rng.kind == "full":
        return np.arange(1, rng.P + 1, dtype=np.int64)
    if rng.kind == "dyadic":
        return np.arange(rng.P // 2 + 1, rng.P + 1, dtype=np.int64)
    lpf = largest_prime_factor_table(rng.P)
    n = np.arange(1, rng.P + 1, dtype=np.int64)
    return n[lpf[1:] <= rng.R]


# -- results and cache ------------------------------------------------------

@dataclass
class CountResult:
    count: int
    system_digest: str
    range: RangeSpec
    method: str
    wall_time: float = 0.0

    def as_record(self) -> dict:
        return {"digest": self.system_digest, "P": self.range.P, "range": self.range.kind,
                "eta": self.range.eta, "count": self.count, "method": self.method,
                "seconds": round(self.wall_time, 6)}


class CountCache:
    """On-disk cache of counts keyed by (system digest, range, method)."""

    def __init__(self, directory):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    @classmethod
    def from_env(cls) -> "CountCache | None":
        d = os.environ.get(CACHE_ENV)
        return cls(d) if d else None

    def _path(self, digest: str, rng: RangeSpec, method: str) -> Path:
        key = json.dumps([digest, rng.key(), method], sort_keys=True)
        return self.directory / (hashlib.sha256(key.encode()).hexdigest()[:24] + ".json")

    def get(self, digest: str, rng: RangeSpec, method: str) -> CountResult | None:
        path = self._path(digest, rng, method)
        if not path.exists():
            return None
        rec = json.loads(path.read_text())
        return CountResult(int(rec["count"]), digest, rng, method, float(rec["seconds"]))

    def put(self, result: CountResult) -> None:
        path = self._path(result.system_digest, result.range, result.method)
        tmp = path.with_suffix(".tmp")
        tmp.write_text(json.dumps(result.as_record(), sort_keys=True))
        tmp.replace(path)


# -- value tables -------------------------------------------------------------

def _fits_int64(system: AdditiveSystem, elems: np.ndarray) -> bool:
    if len(elems) == 0:
        return True
    top = int(elems.max())
    cmax = max(abs(c) for row in system.coeffs for c in row)
    worst_value = cmax * system.s * top ** max(system.degrees)
    worst_count = len(elems) ** system.s
    return worst_value < INT64_SAFE and worst_count < INT64_SAFE


def _column_values(system: AdditiveSystem, j: int, elems: np.ndarray) -> np.ndarray:
    """(len(elems), r) array of c_ij * x**d_i."""
    cols = [system.coeffs[i][j] * elems ** d for i, d in enumerate(system.degrees)]
    return np.stack(cols, axis=1)


def _column_values_py(system: AdditiveSystem, j: int, elems) -> list[tuple[int, ...]]:
    return [tuple(row[j] * int(x) ** d for d, row in zip(system.degrees, system.coeffs))
            for x in elems]


# -- brute force --------------------------------------------------------------

def _brute_count(system: AdditiveSystem, elems: np.ndarray, chunk: int = 1 << 20) -> int:
    s, r = system.s, system.r
    n = len(elems)
    if n == 0:
        return 0
    if not _fits_int64(system, elems):
        total = 0
        for x in itertools.product((int(e) for e in elems), repeat=s):
            if all(v == 0 for v in system.evaluate(x)):
                total += 1
        return total
    # vectorise over the last m variables, loop over the rest
    m = 1
    while m < s and n ** (m + 1) <= chunk:
        m += 1
    tail_cols = list(range(s - m, s))
    tail = np.zeros((1, r), dtype=np.int64)
    for j in tail_cols:
        vals = _column_values(system, j, elems)
        tail = (tail[:, None, :] + vals[None, :, :]).reshape(-1, r)
    head_vals = [_column_values(system, j, elems) for j in range(s - m)]
    total = 0
    for idx in itertools.product(range(n), repeat=s - m):
        offset = np.zeros(r, dtype=np.int64)
        for j, t in enumerate(idx):
            offset += head_vals[j][t]
        total += int(np.count_nonzero(np.all(tail == -offset, axis=1)))
    return total


# -- meet in the middle -------------------------------------------------------

def _compress(keys: np.ndarray, counts: np.ndarray):
    """Merge equal key rows, summing their counts (exact int64)."""
    if len(keys) == 0:
        return keys, counts
    if keys.shape[1] == 1:
        order = np.argsort(keys[:, 0], kind="stable")
    else:
        order = np.lexsort(keys.T[::-1])
    k = keys[order]
    change = np.any(k[1:] != k[:-1], axis=1)
    starts = np.concatenate(([0], np.nonzero(change)[0] + 1))
    return k[starts], np.add.reduceat(counts[order], starts)


def _dense_half(value_tables: Sequence[np.ndarray], r: int):
    """Histogram of partial sums on the bounding box, built by shifted adds."""
    lo = np.sum([t.min(axis=0) for t in value_tables], axis=0)
    hi = np.sum([t.max(axis=0) for t in value_tables], axis=0)
    hist = np.zeros([1] * r, dtype=np.int64)
    hist[(0,) * r] = 1
    cur_lo = np.zeros(r, dtype=np.int64)
    for vals in value_tables:
        uniq, mult = np.unique(vals, axis=0, return_counts=True)
        vlo = uniq.min(axis=0)
        shape = np.array(hist.shape) + uniq.max(axis=0) - vlo
        new = np.zeros(tuple(shape), dtype=np.int64)
        for v, m in zip(uniq, mult):
            off = v - vlo
            sl = tuple(slice(o, o + n) for o, n in zip(off, hist.shape))
            new[sl] += m * hist
        hist, cur_lo = new, cur_lo + vlo
    idx = np.nonzero(hist)
    keys = np.stack(idx, axis=1).astype(np.int64) + cur_lo
    assert np.all(keys >= lo) and np.all(keys <= hi)
    return keys, hist[idx]


def half_distribution(value_tables: Sequence[np.ndarray], r: int, budget: int = 60_000_000):
    """Distribution of sums of one row from each table: (keys, counts).

    A dense histogram is used when the box of possible sums is smaller than
    the number of tuples; otherwise partial vectors are merged by sorting.
    """
    if value_tables:
        span = np.prod([float(np.sum([t.max(axis=0)[i] - t.min(axis=0)[i] for t in value_tables]) + 1)
                        for i in range(r)])
        tuples = np.prod([float(len(t)) for t in value_tables])
        if span < tuples and span * max(len(t) for t in value_tables) <= 40 * budget \
                and span <= budget:
            return _dense_half(value_tables, r)
    keys = np.zeros((1, r), dtype=np.int64)
    counts = np.ones(1, dtype=np.int64)
    for vals in value_tables:
        size = len(keys) * len(vals)
        if size * max(r, 1) > budget:
            raise BudgetExceeded(f"half enumeration of {size} partial vectors exceeds budget")
        keys = (keys[:, None, :] + vals[None, :, :]).reshape(-1, r)
        counts = np.repeat(counts, len(vals))
        keys, counts = _compress(keys, counts)
    return keys, counts


def _join(lk, lc, rk, rc) -> int:
    """sum over v of left(v) * right(-v)."""
    rk = -rk
    if lk.shape[1] == 1:
        order = np.argsort(rk[:, 0])
        rs, rcs = rk[order, 0], rc[order]
        pos = np.searchsorted(rs, lk[:, 0])
        pos = np.minimum(pos, len(rs) - 1)
        hit = rs[pos] == lk[:, 0]
        return int(np.sum(lc[hit] * rcs[pos[hit]]))
    both = np.concatenate([lk, rk])
    _, inv = np.unique(both, axis=0, return_inverse=True)
    inv = inv.reshape(-1)
    codes_l, codes_r = inv[: len(lk)], inv[len(lk):]
    right = dict(zip(codes_r.tolist(), rc.tolist()))
    return sum(c * right.get(code, 0) for code, c in zip(codes_l.tolist(), lc.tolist()))


def _mitm_count_py(system: AdditiveSystem, elems, split: int) -> int:
    def dist(cols):
        d = {(0,) * system.r: 1}
        for j in cols:
            vals = _column_values_py(system, j, elems)
            nd = defaultdict(int)
            for key, c in d.items():
                for v in vals:
                    nd[tuple(a + b for a, b in zip(key, v))] += c
            d = nd
        return d
    left = dist(range(split))
    right = dist(range(split, system.s))
    return sum(c * right.get(tuple(-a for a in key), 0) for key, c in left.items())


def default_split(s: int) -> int:
    # equal range sizes: balance the halves, the extra variable goes left
    return (s + 1) // 2


def _mitm_count(system: AdditiveSystem, elems: np.ndarray, split: int | None = None,
                budget: int = 60_000_000) -> int:
    s = system.s
    split = default_split(s) if split is None else split
    if not 0 <= split <= s:
        raise ValueError("split out of range")
    if len(elems) == 0:
        return 0
    if not _fits_int64(system, elems):
        return _mitm_count_py(system, elems, split)
    tables = [_column_values(system, j, elems) for j in range(s)]
    lk, lc = half_distribution(tables[:split], system.r, budget)
    rk, rc = half_distribution(tables[split:], system.r, budget)
    return _join(lk, lc, rk, rc)


def count_solutions(system: AdditiveSystem, rng: RangeSpec, method: str = "mitm", *,
                    split: int | None = None, cache: CountCache | None = None,
                    budget: int = 60_000_000) -> CountResult:
    """Number of x in range^s with every equation of ``system`` vanishing."""
    if method not in ("brute", "mitm"):
        raise ValueError(f"unknown method {method!r}")
    digest = system.digest()
    if cache is not None and split is None:
        hit = cache.get(digest, rng, method)
        if hit is not None:
            return hit
    t0 = time.perf_counter()
    elems = enumerate_range(rng)
    if method == "brute":
        if len(elems) ** system.s > budget * 20:
            raise BudgetExceeded(f"brute force over {len(elems)}^{system.s} tuples")
        count = _brute_count(system, elems)
    else:
        count = _mitm_count(system, elems, split, budget)
    result = CountResult(int(count), digest, rng, method, round(time.perf_counter() - t0, 6))
    if cache is not None and split is None:
        cache.put(result)
    return result


# -- mean values ---------------------------------------------------------------

def vinogradov_system(u: int, k_vec: Sequence[int]) -> AdditiveSystem:
    """sum_{j<=u} x_j^k - sum_{j>u} x_j^k = 0 for every k in k_vec."""
    ks = sorted({int(k) for k in k_vec}, reverse=True)
    if len(ks) != len(k_vec):
        raise ValueError("exponents must be distinct")
    row = [1] * u + [-1] * u
    return AdditiveSystem(tuple(ks), tuple(tuple(row) for _ in ks))


def mean_value_J(u: int, k_vec: Sequence[int], rng: RangeSpec, *,
                 cache: CountCache | None = None, budget: int = 60_000_000) -> CountResult:
    """J_{u,k}: solutions of the symmetric power-sum system in 2u variables.

    Computed as sum over v of D(v)^2, where D is the distribution of the
    power-sum vector of a u-tuple.
    """
    if u < 1:
        raise ValueError("u must be >= 1")
    system = vinogradov_system(u, k_vec)
    digest = system.digest()
    if cache is not None:
        hit = cache.get(digest, rng, "mitm")
        if hit is not None:
            return hit
    t0 = time.perf_counter()
    elems = enumerate_range(rng)
    if not _fits_int64(system, elems):
        count = _mitm_count_py(system, elems, u)
    else:
        tables = [_column_values(system, j, elems) for j in range(u)]
        _, counts = half_distribution(tables, system.r, budget)
        count = sum(c * c for c in counts.tolist())
    result = CountResult(int(count), digest, rng, "mitm", round(time.perf_counter() - t0, 6))
    if cache is not None:
        cache.put(result)
    return result


@dataclass(frozen=True)
class BlockPartition:
    """Variables split into blocks B_{h,m} of size 2u_h (m < mu_h - mu_{h+1}) plus B_0."""

    u: tuple[int, ...]
    blocks: tuple[tuple[int, int, tuple[int, ...]], ...]   # (h, m, columns)
    B0: tuple[int, ...]

    @property
    def s0(self) -> int:
        return sum(len(cols) for _, _, cols in self.blocks) // 2

    def blocked_columns(self) -> list[int]:
        return [j for _, _, cols in self.blocks for j in cols]


def make_partition(prof: DegreeProfile, u: Sequence[int], s: int) -> BlockPartition:
    u = tuple(int(x) for x in u)
    if len(u) != prof.t:
        raise ValueError(f"need one u_h per level ({prof.t}), got {len(u)}")
    if any(x < 1 for x in u):
        raise ValueError("block exponents u_h must be >= 1")
    need = 2 * sum((prof.mu[h] - prof.mu_next(h)) * u[h] for h in range(prof.t))
    if need > s:
        raise ValueError(f"partition needs {need} variables, system has {s}")
    blocks = []
    nxt = 0
    for h in range(prof.t):
        for m in range(prof.mu[h] - prof.mu_next(h)):
            blocks.append((h, m, tuple(range(nxt, nxt + 2 * u[h]))))
            nxt += 2 * u[h]
    return BlockPartition(u, tuple(blocks), tuple(range(nxt, s)))


def _check_partition(prof: DegreeProfile, part: BlockPartition, s: int) -> None:
    seen = part.blocked_columns() + list(part.B0)
    if sorted(seen) != list(range(s)):
        raise ValueError("partition blocks must be disjoint and cover all variables")
    per_level = defaultdict(int)
    for h, _, cols in part.blocks:
        if h >= prof.t or len(cols) != 2 * part.u[h]:
            raise ValueError(f"block at level {h} has size {len(cols)}")
        per_level[h] += 1
    for h in range(prof.t):
        if per_level[h] != prof.mu[h] - prof.mu_next(h):
            raise ValueError(f"level {h} needs {prof.mu[h] - prof.mu_next(h)} blocks")


def mean_value_I(system: AdditiveSystem, part: BlockPartition, rng: RangeSpec,
                 method: str = "mitm", **kw) -> CountResult:
    """The blocked mean value: by orthogonality, the number of solutions of
    the system restricted to the blocked variables."""
    prof = derive_profile(system)
    _check_partition(prof, part, system.s)
    return count_solutions(system.restrict(part.blocked_columns()), rng, method, **kw)


@dataclass
class SlopeFit:
    slope: float
    intercept: float
    residual: float


def slope_estimate(counts: Sequence[tuple[float, float]]) -> SlopeFit:
    """Least-squares slope of log(count) against log(P)."""
    if len(counts) < 3:
        raise ValueError("need at least three (P, count) points")
    P = np.array([c[0] for c in counts], dtype=float)
    N = np.array([c[1] for c in counts], dtype=float)
    if np.any(N <= 0):
        raise ValueError("zero count in slope input")
    if np.any(np.diff(P) <= 0):
        raise ValueError("P values must be increasing")
    x, y = np.log(P), np.log(N)
    slope, intercept = np.polyfit(x, y, 1)
    resid = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    return SlopeFit(float(slope), float(intercept), resid)


def mean_value_diagnostic(system: AdditiveSystem, u: Sequence[int], P_list: Sequence[int],
                          kind: str = "full", eta: float | None = None) -> list[dict]:
    """log I - sum_h (mu_h - mu_{h+1}) log J_{u_h,k_h} along a ladder of P.

    The block decoupling bound says this stays bounded; the rows let one see
    whether it drifts upward.  Observational only.
    """
    prof = derive_profile(system)
    part = make_partition(prof, u, system.s)
    rows = []
    for P in P_list:
        rng = RangeSpec(kind, P, eta)
        I = mean_value_I(system, part, rng).count
        logJ = 0.0
        Js = []
        for h in range(prof.t):
            J = mean_value_J(part.u[h], prof.exponents_upto(h), rng).count
            Js.append(J)
            logJ += (prof.mu[h] - prof.mu_next(h)) * math.log(J)
        rows.append({"P": P, "I": I, "J": Js,
                     "log_ratio": (math.log(I) if I > 0 else float("-inf")) - logJ})
    return rows
