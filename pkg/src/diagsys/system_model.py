"""Diagonal systems, their degree profile, and the highly non-singular test.

A system is ``sum_j c[i][j] * x_j**d_i = 0`` for ``i = 0..r-1``.  Rows are
kept sorted by degree (non-increasing); the :class:`DegreeProfile` regroups
them by multiplicity of degree.

Indices are 0-based throughout (rows, columns, minor witnesses).
"""

from __future__ import annotations

import hashlib
import itertools
import json
import math
import random
import re
import warnings
from collections import Counter
from dataclasses import dataclass
from typing import Sequence


class SystemFormatError(ValueError):
    """Malformed system description; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class BudgetExceeded(RuntimeError):
    """An enumeration would exceed its configured budget."""


@dataclass(frozen=True)
class AdditiveSystem:
    degrees: tuple[int, ...]
    coeffs: tuple[tuple[int, ...], ...]
    # original row index of each stored row (identity unless re-sorted on input)
    input_order: tuple[int, ...] = ()

    def __post_init__(self):
        degrees = tuple(int(d) for d in self.degrees)
        coeffs = tuple(tuple(int(c) for c in row) for row in self.coeffs)
        object.__setattr__(self, "degrees", degrees)
        object.__setattr__(self, "coeffs", coeffs)
        if not self.input_order:
            object.__setattr__(self, "input_order", tuple(range(len(degrees))))
        if not degrees:
            raise SystemFormatError("system needs at least one equation")
        if len(coeffs) != len(degrees):
            raise SystemFormatError("one coefficient row per degree required")
        s = len(coeffs[0])
        if s < 1:
            raise SystemFormatError("system needs at least one variable")
        for i, (d, row) in enumerate(zip(degrees, coeffs)):
            if d < 1:
                raise SystemFormatError(f"non-positive degree {d} in equation {i}")
            if len(row) != s:
                raise SystemFormatError(
                    f"equation {i} has {len(row)} coefficients, expected {s}")
            for j, c in enumerate(row):
                if c == 0:
                    raise SystemFormatError(f"zero coefficient at ({i},{j})")
        if any(a < b for a, b in zip(degrees, degrees[1:])):
            raise SystemFormatError("degrees must be sorted non-increasing")

    @classmethod
    def from_rows(cls, degrees: Sequence[int], coeffs: Sequence[Sequence[int]]) -> "AdditiveSystem":
        """Build a system from rows in any order; rows are stably sorted by degree."""
        degrees = [int(d) for d in degrees]
        order = sorted(range(len(degrees)), key=lambda i: -degrees[i])
        return cls(tuple(degrees[i] for i in order),
                   tuple(tuple(coeffs[i]) for i in order),
                   tuple(order))

    @property
    def s(self) -> int:
        return len(self.coeffs[0])

    @property
    def r(self) -> int:
        return len(self.degrees)

    @property
    def total_degree(self) -> int:
        return sum(self.degrees)

    def digest(self) -> str:
        """Content hash of (degrees, coeffs); stable across runs."""
        payload = json.dumps({"degrees": self.degrees, "coeffs": self.coeffs},
                             separators=(",", ":"))
        return hashlib.sha256(payload.encode()).hexdigest()[:16]

    def restrict(self, columns: Sequence[int]) -> "AdditiveSystem":
        """Subsystem on the given variable columns (same equations)."""
        return AdditiveSystem(self.degrees,
                              tuple(tuple(row[j] for j in columns) for row in self.coeffs))

    def scale_row(self, i: int, factor: int) -> "AdditiveSystem":
        if factor == 0:
            raise ValueError("scale factor must be nonzero")
        coeffs = list(self.coeffs)
        coeffs[i] = tuple(factor * c for c in coeffs[i])
        return AdditiveSystem(self.degrees, tuple(coeffs))

    def permute_columns(self, perm: Sequence[int]) -> "AdditiveSystem":
        return self.restrict(perm)

    def evaluate(self, x: Sequence[int]) -> tuple[int, ...]:
        return tuple(sum(c * xj ** d for c, xj in zip(row, x))
                     for d, row in zip(self.degrees, self.coeffs))


# -- text / JSON formats ----------------------------------------------------

_HEADER = re.compile(r"^\s*(\d+)\s*\|\s*(\d+)\s*$")


def _split_statements(text: str):
    """Yield (line_no, statement) pairs; ';' also separates statements."""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        for part in line.split(";"):
            if part.strip():
                yield lineno, part.strip()


def parse_system(text: str) -> AdditiveSystem:
    """Parse the plain-text (or JSON) system description.

    Text format: optional header line ``r | s``, then one ``d: c_1 ... c_s``
    per equation; ``#`` starts a comment and ``;`` separates equations on one
    line.  A short header ``r |`` may prefix the first equation, as in
    ``2 | 3: 1 1 1 ; 2: 1 1 -2``.
    """
    stripped = text.strip()
    if stripped.startswith("{"):
        return parse_system_json(stripped)

    header = None
    degrees: list[int] = []
    rows: list[list[int]] = []
    lines: list[int] = []
    for lineno, stmt in _split_statements(text):
        m = _HEADER.match(stmt)
        if m and not degrees and header is None:
            header = (int(m.group(1)), int(m.group(2)))
            continue
        # "r | d: coeffs" -- header glued to the first equation
        if "|" in stmt:
            if degrees or header is not None:
                raise SystemFormatError("unexpected '|'", lineno)
            head, stmt = stmt.split("|", 1)
            try:
                header = (int(head), None)
            except ValueError:
                raise SystemFormatError(f"bad header {head.strip()!r}", lineno) from None
            stmt = stmt.strip()
        if ":" not in stmt:
            raise SystemFormatError(f"expected 'degree: coefficients', got {stmt!r}", lineno)
        dtok, ctok = stmt.split(":", 1)
        try:
            d = int(dtok)
            coeffs = [int(tok) for tok in ctok.split()]
        except ValueError:
            raise SystemFormatError(f"non-integer token in {stmt!r}", lineno) from None
        if d < 1:
            raise SystemFormatError(f"non-positive degree {d}", lineno)
        if not coeffs:
            raise SystemFormatError("equation without coefficients", lineno)
        if rows and len(coeffs) != len(rows[0]):
            raise SystemFormatError(
                f"inconsistent column count: {len(coeffs)} vs {len(rows[0])}", lineno)
        for j, c in enumerate(coeffs):
            if c == 0:
                raise SystemFormatError(f"zero coefficient at ({len(rows)},{j})", lineno)
        degrees.append(d)
        rows.append(coeffs)
        lines.append(lineno)

    if not rows:
        raise SystemFormatError("no equations found")
    if header is not None:
        r_hdr, s_hdr = header
        if r_hdr != len(rows):
            raise SystemFormatError(f"header says r={r_hdr}, found {len(rows)} equations")
        if s_hdr is not None and s_hdr != len(rows[0]):
            raise SystemFormatError(f"header says s={s_hdr}, found {len(rows[0])} columns")
    return AdditiveSystem.from_rows(degrees, rows)


def parse_system_json(text: str) -> AdditiveSystem:
    try:
        obj = json.loads(text)
        degrees, coeffs = obj["degrees"], obj["coeffs"]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise SystemFormatError(f"bad JSON system: {exc}") from None
    if len(degrees) != len(coeffs):
        raise SystemFormatError("degrees and coeffs lengths differ")
    for i, row in enumerate(coeffs):
        if len(row) != len(coeffs[0]):
            raise SystemFormatError(f"inconsistent column count in row {i}")
        for j, c in enumerate(row):
            if c == 0:
                raise SystemFormatError(f"zero coefficient at ({i},{j})")
    return AdditiveSystem.from_rows(degrees, coeffs)


def serialize_system(system: AdditiveSystem) -> str:
    """Canonical text form: header then rows by degree, descending."""
    out = [f"{system.r} | {system.s}"]
    for d, row in zip(system.degrees, system.coeffs):
        out.append(f"{d}: " + " ".join(str(c) for c in row))
    return "\n".join(out) + "\n"


def system_to_json(system: AdditiveSystem) -> str:
    return json.dumps({"degrees": list(system.degrees),
                       "coeffs": [list(row) for row in system.coeffs]})


def load_system(path) -> AdditiveSystem:
    with open(path, encoding="utf-8") as fh:
        return parse_system(fh.read())


# -- degree profile ---------------------------------------------------------

@dataclass(frozen=True)
class DegreeProfile:
    """Degrees regrouped by multiplicity.

    ``mu`` is strictly decreasing; ``k_table[l]`` lists the exponents of
    multiplicity ``mu[l]`` in increasing order.  ``row_order[p]`` is the row of
    the (degree-sorted) system that sits at position ``p`` of the profile
    ordering, so rows ``r_index`` block by block.
    """

    mu: tuple[int, ...]
    nu: tuple[int, ...]
    k_table: tuple[tuple[int, ...], ...]
    r_index: tuple[tuple[int, ...], ...]
    K_partial: tuple[int, ...]
    K: int
    M: int
    varpi: tuple[int, ...]
    k_tilde: tuple[int, ...]
    row_order: tuple[int, ...]

    @property
    def t(self) -> int:
        return len(self.mu)

    @property
    def k(self) -> int:
        return self.k_tilde[-1]

    @property
    def mu_min(self) -> int:
        return self.mu[-1]

    @property
    def r(self) -> int:
        return self.r_index[-1][-1]

    def mu_next(self, h: int) -> int:
        """mu_{h+1} with the convention mu_{t+1} = 0 (0-based ``h``)."""
        return self.mu[h + 1] if h + 1 < self.t else 0

    def exponents_upto(self, h: int) -> tuple[int, ...]:
        """The exponent vector k_h: all exponents on levels 0..h."""
        return tuple(e for level in self.k_table[: h + 1] for e in level)

    def exponents(self) -> tuple[int, ...]:
        return self.exponents_upto(self.t - 1)

    def row_blocks(self):
        """Yield (l, n, exponent, profile-row range) for every block I_{l,n}."""
        for l, level in enumerate(self.k_table):
            for n, e in enumerate(level):
                end = self.r_index[l][n]
                yield l, n, e, range(end - self.mu[l], end)


def derive_profile(system: AdditiveSystem) -> DegreeProfile:
    mult = Counter(system.degrees)
    mus = sorted(set(mult.values()), reverse=True)
    k_table = tuple(tuple(sorted(e for e, m in mult.items() if m == mu)) for mu in mus)
    nu = tuple(len(level) for level in k_table)

    r_index = []
    done = 0
    for mu, level in zip(mus, k_table):
        r_index.append(tuple(done + mu * (n + 1) for n in range(len(level))))
        done += mu * len(level)

    K_partial = tuple(sum(level) for level in k_table)
    varpi = tuple(itertools.accumulate(nu))
    k_tilde = tuple(itertools.accumulate((max(level) for level in k_table), max))

    row_order = []
    for level in k_table:
        for e in level:
            row_order.extend(i for i, d in enumerate(system.degrees) if d == e)

    return DegreeProfile(
        mu=tuple(mus), nu=nu, k_table=k_table, r_index=tuple(r_index),
        K_partial=K_partial, K=sum(m * Kl for m, Kl in zip(mus, K_partial)),
        M=mus[0], varpi=varpi, k_tilde=k_tilde, row_order=tuple(row_order))


def profile_ordered(system: AdditiveSystem, prof: DegreeProfile):
    """Rows of ``system`` rearranged into profile order: (degrees, coeffs)."""
    return ([system.degrees[i] for i in prof.row_order],
            [system.coeffs[i] for i in prof.row_order])


# -- highly non-singular check ---------------------------------------------

def bareiss_det(matrix: Sequence[Sequence[int]]) -> int:
    """Exact determinant of a square integer matrix (fraction-free elimination)."""
    a = [list(map(int, row)) for row in matrix]
    n = len(a)
    if n == 0:
        return 1
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for i in range(k + 1, n):
                if a[i][k] != 0:
                    a[k], a[i] = a[i], a[k]
                    sign = -sign
                    break
            else:
                return 0
        pivot = a[k][k]
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * pivot - a[i][k] * a[k][j]) // prev
            a[i][k] = 0
        prev = pivot
    return sign * a[n - 1][n - 1]


@dataclass(frozen=True)
class NonSingularityReport:
    holds: bool
    minors_checked: int
    mode: str
    # (l, n, exponent, rows, columns) of the first vanishing minor
    witness: tuple | None = None

    def as_dict(self) -> dict:
        w = None
        if self.witness is not None:
            l, n, e, rows, cols = self.witness
            w = {"level": l, "index": n, "degree": e, "rows": list(rows), "columns": list(cols)}
        return {"holds": self.holds, "mode": self.mode,
                "minors_checked": self.minors_checked, "witness": w}


def minor_budget(system: AdditiveSystem, prof: DegreeProfile) -> int:
    return sum(math.comb(system.s, mu) * nu for mu, nu in zip(prof.mu, prof.nu))


def check_highly_nonsingular(system: AdditiveSystem, prof: DegreeProfile | None = None,
                             mode: str = "exhaustive", *, seed: int = 0, trials: int = 1000,
                             budget: int = 2_000_000) -> NonSingularityReport:
    """Test that every mu_l x mu_l minor of every block I_{l,n} is nonzero.

    ``mode="exhaustive"`` decides the condition exactly, reporting the first
    vanishing minor in (block, lexicographic column tuple) order.
    ``mode="randomized"`` draws ``trials`` random column tuples per block and
    can only refute the condition.
    """
    prof = prof or derive_profile(system)
    if any(d == 1 for d in system.degrees):
        warnings.warn("system has linear equations (degree 1); the bounds target degree >= 2",
                      stacklevel=2)
    s = system.s
    checked = 0
    if mode == "exhaustive":
        need = minor_budget(system, prof)
        if need > budget:
            raise BudgetExceeded(f"{need} minors exceed budget {budget}; use randomized mode")
    elif mode != "randomized":
        raise ValueError(f"unknown mode {mode!r}")
    rng = random.Random(seed)

    for l, n, e, rows in prof.row_blocks():
        mu = prof.mu[l]
        rows = [prof.row_order[p] for p in rows]
        block = [system.coeffs[i] for i in rows]
        if mu > s:
            # no mu-tuple of columns exists; the condition is vacuous
            continue
        if mode == "exhaustive":
            tuples = itertools.combinations(range(s), mu)
        else:
            tuples = (tuple(sorted(rng.sample(range(s), mu))) for _ in range(trials))
        for cols in tuples:
            checked += 1
            if bareiss_det([[row[j] for j in cols] for row in block]) == 0:
                return NonSingularityReport(False, checked, mode,
                                            (l, n, e, tuple(rows), tuple(cols)))
    return NonSingularityReport(True, checked, mode)
