"""Exponential sums, Dickman's function, oscillatory integrals and arcs.

Conventions: ``e(x) = exp(2 pi i x)``.  A phase vector ``gamma`` is paired
with an exponent vector ``k_vec``, so that
``f(gamma) = sum_{x in A} e(gamma_1 x^k_1 + ... + gamma_w x^k_w)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .counting import RangeSpec, enumerate_range
from .system_model import AdditiveSystem, derive_profile

TWO_PI = 2.0 * math.pi


def e(x):
    return np.exp(1j * TWO_PI * np.asarray(x, dtype=float))


# -- Weyl sums ------------------------------------------------------------------

def _exact_phases(gamma: Sequence, k_vec: Sequence[int], elems: np.ndarray):
    """Phases reduced mod 1 exactly when every gamma_k is rational: (numerators, q)."""
    fracs = [Fraction(g) for g in gamma]
    q = math.lcm(*(f.denominator for f in fracs))
    nums = [f.numerator * (q // f.denominator) % q for f in fracs]
    if q < 2 ** 31:
        x = elems % q
        acc = np.zeros(len(elems), dtype=np.int64)
        for a, k in zip(nums, k_vec):
            xp = np.ones(len(elems), dtype=np.int64)
            for _ in range(k):
                xp = xp * x % q
            acc = (acc + a * xp) % q
        return acc, q
    vals = [sum(a * pow(int(x), k, q) for a, k in zip(nums, k_vec)) % q for x in elems]
    return vals, q


def f_eval(gamma: Sequence, k_vec: Sequence[int], rng: RangeSpec | np.ndarray) -> complex:
    """Weyl sum over a range (or an explicit array of integers).

    Rational ``gamma`` (``Fraction``/``int``) is reduced exactly; floats are
    summed in double precision.
    """
    elems = rng if isinstance(rng, np.ndarray) else enumerate_range(rng)
    if len(gamma) != len(k_vec):
        raise ValueError("gamma and k_vec lengths differ")
    if all(isinstance(g, (int, Fraction)) for g in gamma):
        nums, q = _exact_phases(gamma, k_vec, elems)
        roots = np.exp(1j * TWO_PI * np.arange(q) / q) if q <= 1 << 22 else None
        if roots is not None:
            return complex(roots[np.asarray(nums)].sum())
        return complex(np.exp(1j * TWO_PI * np.asarray(nums, dtype=float) / q).sum())
    x = elems.astype(float)
    phase = np.zeros(len(elems))
    for g, k in zip(gamma, k_vec):
        phase += float(g) * x ** k
    return complex(np.exp(1j * TWO_PI * np.mod(phase, 1.0)).sum())


def weyl_sums(gammas: np.ndarray, k_vec: Sequence[int], elems: np.ndarray) -> np.ndarray:
    """f(Gamma_j) for every row of ``gammas`` (shape (s, w)) at once."""
    x = elems.astype(float)
    powers = np.stack([x ** k for k in k_vec])          # (w, n)
    phase = np.mod(np.asarray(gammas, dtype=float) @ powers, 1.0)
    return np.exp(1j * TWO_PI * phase).sum(axis=1)


def complete_sum_S(q: int, a: Sequence[int], k_vec: Sequence[int]) -> complex:
    """S(q, a) = sum_{x=1}^{q} e((a_1 x^k_1 + ...)/q), by direct summation."""
    if q < 1:
        raise ValueError("q must be >= 1")
    gamma = [Fraction(int(ai), q) for ai in a]
    return f_eval(gamma, k_vec, np.arange(1, q + 1, dtype=np.int64))


def _all_S(q: int, k: int) -> np.ndarray:
    """S(q, a) for a = 0..q-1, single exponent k."""
    x = np.arange(q, dtype=np.int64)
    xp = np.ones(q, dtype=np.int64)
    for _ in range(k):
        xp = xp * x % q
    roots = np.exp(1j * TWO_PI * np.arange(q) / q)
    a = np.arange(q, dtype=np.int64)
    return roots[(a[:, None] * xp[None, :]) % q].sum(axis=1)


@dataclass
class SqaScan:
    k_vec: tuple[int, ...]
    q_max: int
    max_ratio: float
    argmax: tuple[int, tuple[int, ...]]
    per_q: list[float] = field(default_factory=list)


def sqa_bound_scan(q_max: int, k_vec: Sequence[int] = (2,)) -> SqaScan:
    """max over q <= q_max and all a of |S(q,a)| / ((q,a)^{1/k} q^{1-1/k}), k = max k_vec.

    Multi-exponent scans sweep all of (Z/q)^w, so keep q_max small there.
    """
    k_vec = tuple(int(k) for k in k_vec)
    k = max(k_vec)
    best, arg, per_q = 0.0, (1, (0,) * len(k_vec)), []
    for q in range(1, q_max + 1):
        if len(k_vec) == 1:
            S = np.abs(_all_S(q, k_vec[0]))
            a_grid = np.arange(q)[:, None]
        else:
            a_grid = np.array(list(np.ndindex(*(q,) * len(k_vec))), dtype=np.int64)
            x = np.arange(1, q + 1, dtype=np.int64)
            acc = np.zeros((len(a_grid), q), dtype=np.int64)
            for col, kk in enumerate(k_vec):
                xp = np.ones(q, dtype=np.int64)
                for _ in range(kk):
                    xp = xp * x % q
                acc = (acc + a_grid[:, col:col + 1] * xp[None, :]) % q
            S = np.abs(np.exp(1j * TWO_PI * acc / q).sum(axis=1))
        g = np.gcd.reduce(np.concatenate([np.full((len(a_grid), 1), q), a_grid], axis=1), axis=1)
        ratio = S / (g ** (1.0 / k) * q ** (1.0 - 1.0 / k))
        i = int(np.argmax(ratio))
        per_q.append(float(ratio[i]))
        if ratio[i] > best + 1e-12:
            best, arg = float(ratio[i]), (q, tuple(int(v) for v in a_grid[i]))
    return SqaScan(k_vec, q_max, best, arg, per_q)


# -- Dickman's function ---------------------------------------------------------

class _DickmanTable:
    """rho on [2, U] from rho(u) = rho(n) - int_n^u rho(t-1)/t dt, one unit at a time."""

    def __init__(self, per_unit: int = 2048):
        self.n = per_unit
        self.h = 1.0 / per_unit
        grid = 1.0 + self.h * np.arange(per_unit + 1)       # [1, 2]
        self.u = grid
        self.rho = 1.0 - np.log(grid)
        self.top = 2
        self._spline = None

    def extend(self, upto: float) -> None:
        from scipy.integrate import cumulative_simpson
        while self.top < upto:
            prev = self.rho[-(self.n + 1):]                  # rho on [top-1, top]
            t = self.top + self.h * np.arange(self.n + 1)
            integral = cumulative_simpson(prev / t, dx=self.h, initial=0.0)
            new = self.rho[-1] - integral
            self.u = np.concatenate([self.u, t[1:]])
            self.rho = np.concatenate([self.rho, new[1:]])
            self.top += 1
            self._spline = None

    def __call__(self, u: np.ndarray) -> np.ndarray:
        self.extend(float(np.max(u)) if u.size else 2.0)
        if self._spline is None:
            # rho'(u) = -rho(u-1)/u; the derivative table is exact on the grid
            lag = np.concatenate([np.ones(self.n), self.rho[: -self.n]])
            self._spline = CubicHermiteSpline(self.u, self.rho, -lag / self.u)
        return self._spline(u)


_TABLE = _DickmanTable()


def dickman_rho(u):
    """Dickman's function; accepts scalars or arrays."""
    arr = np.asarray(u, dtype=float)
    if np.any(arr < 0):
        raise ValueError("dickman_rho needs u >= 0")
    out = np.ones_like(arr)
    mid = (arr > 1) & (arr <= 2)
    out[mid] = 1.0 - np.log(arr[mid])
    hi = arr > 2
    if np.any(hi):
        out[hi] = np.maximum(_TABLE(arr[hi]), 0.0)
    return float(out) if np.ndim(u) == 0 else out


# -- oscillatory integrals --------------------------------------------------------

_GL_HI = np.polynomial.legendre.leggauss(20)
_GL_LO = np.polynomial.legendre.leggauss(10)


def _gl(f, a, b, rule):
    x, w = rule
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    return half * np.dot(w, f(mid + half * x))


def _phase_breaks(beta, k_vec, a, b, weight_breaks=()):
    """Split [a, b] at stationary points so each piece has monotone phase,
    then into pieces of at most a quarter turn."""
    coeffs = np.zeros(max(k_vec) + 1)
    for bt, k in zip(beta, k_vec):
        coeffs[k] += bt
    poly = np.polynomial.Polynomial(coeffs)
    deriv = poly.deriv()
    pts = {a, b}
    pts.update(w for w in weight_breaks if a < w < b)
    if deriv.degree() >= 1:
        for root in deriv.roots():
            if abs(root.imag) < 1e-12 and a < root.real < b:
                pts.add(float(root.real))
    pts = sorted(pts)
    out = [pts[0]]
    for lo, hi in zip(pts, pts[1:]):
        turns = abs(poly(hi) - poly(lo))
        m = int(math.ceil(turns / 0.25)) if turns > 0 else 1
        if m > 1:
            # equal phase increments on a monotone piece
            zs = np.linspace(lo, hi, 16 * m + 1)
            ph = poly(zs)
            if ph[-1] < ph[0]:
                zs, ph = zs[::-1], ph[::-1]
            targets = np.linspace(ph[0], ph[-1], m + 1)[1:-1]
            cuts = np.sort(np.interp(targets, ph, zs))
            out.extend(cuts.tolist())
        out.append(hi)
    return out, poly


def oscillatory_integral(beta: Sequence[float], k_vec: Sequence[int], a: float, b: float,
                         weight=None, weight_breaks=(), rtol: float = 1e-6,
                         max_depth: int = 30) -> tuple[complex, float]:
    """int_a^b weight(z) e(sum beta_k z^k) dz with an error estimate.

    Pieces carry at most a quarter turn of phase; each piece is integrated
    with 20- and 10-point Gauss-Legendre and bisected while they disagree.
    """
    if b <= a:
        return 0j, 0.0
    breaks, poly = _phase_breaks(beta, k_vec, a, b, weight_breaks)

    def f(z):
        val = np.exp(1j * TWO_PI * poly(z))
        return val if weight is None else weight(z) * val

    total, err_total = 0j, 0.0
    # absolute target scaled by the trivial bound |integral| <= (b - a) max|w|
    atol = rtol * (b - a) * 1e-2
    stack = [(lo, hi, 0) for lo, hi in zip(breaks, breaks[1:])]
    while stack:
        lo, hi, depth = stack.pop()
        hi_val = _gl(f, lo, hi, _GL_HI)
        err = abs(hi_val - _gl(f, lo, hi, _GL_LO))
        if err > atol * (hi - lo) / (b - a) and depth < max_depth:
            mid = 0.5 * (lo + hi)
            stack.extend([(lo, mid, depth + 1), (mid, hi, depth + 1)])
            continue
        total += hi_val
        err_total += err
    return complex(total), err_total


def v_integral(beta: Sequence[float], k_vec: Sequence[int], P: float,
               smooth_weighted: bool = False, R: float | None = None,
               lower: float | None = None, rtol: float = 1e-6) -> complex:
    """v(beta; P) = int_{omega R}^P rho(log z / log R)^omega e(sum beta_k z^k) dz.

    omega = 1 when ``smooth_weighted``; ``lower`` overrides the lower limit
    (e.g. P/2 for the dyadic integral).
    """
    if smooth_weighted:
        if R is None or R < 2:
            raise ValueError("weighted integral needs R >= 2")
        logR = math.log(R)
        a = R if lower is None else lower

        def weight(z):
            return dickman_rho(np.log(z) / logR)

        # rho(log z/log R) changes formula at z = R^n
        brk = [R ** n for n in range(1, int(math.log(P) / logR) + 2)]
        val, _ = oscillatory_integral(beta, k_vec, a, P, weight, brk, rtol)
        return val
    a = 0.0 if lower is None else lower
    val, _ = oscillatory_integral(beta, k_vec, a, P, rtol=rtol)
    return val


def v_unit_batch(gammas: np.ndarray, k_vec: Sequence[int], panels: int | None = None,
                 nodes: int = 16) -> np.ndarray:
    """int_0^1 e(sum_k gamma[n, k] z^k) dz for many phase rows at once.

    Composite Gauss-Legendre with the panel count set by the largest total
    phase variation in the batch (at most a quarter turn per panel).
    """
    gammas = np.atleast_2d(np.asarray(gammas, dtype=float))
    if panels is None:
        variation = np.abs(gammas).sum(axis=1).max() if gammas.size else 0.0
        panels = int(math.ceil(4 * variation)) + 4
    x, w = np.polynomial.legendre.leggauss(nodes)
    edges = np.linspace(0.0, 1.0, panels + 1)
    half = 0.5 * np.diff(edges)
    z = (0.5 * (edges[:-1] + edges[1:])[:, None] + half[:, None] * x[None, :]).ravel()
    wz = (half[:, None] * w[None, :]).ravel()
    powers = np.stack([z ** k for k in k_vec])        # (w, nodes)
    phase = gammas @ powers
    return (np.exp(1j * TWO_PI * phase) * wz).sum(axis=1)


@dataclass
class EnvelopeScan:
    max_constant: float
    argmax: tuple[float, ...]
    points: int


def vest_envelope_scan(k_vec: Sequence[int], P: float, betas: np.ndarray,
                       smooth_weighted: bool = False, R: float | None = None,
                       lower: float | None = None, exponent: float | None = None) -> EnvelopeScan:
    """max over the grid of |v(beta)| (1 + sum |beta_k| P^k)^{exponent} / P.

    ``exponent`` defaults to 1/k with k = max(k_vec).
    """
    k = max(k_vec)
    exponent = 1.0 / k if exponent is None else exponent
    best, arg = 0.0, ()
    for beta in np.atleast_2d(betas):
        v = v_integral(beta, k_vec, P, smooth_weighted, R, lower)
        size = 1.0 + sum(abs(b) * P ** kk for b, kk in zip(beta, k_vec))
        c = abs(v) * size ** exponent / P
        if c > best:
            best, arg = c, tuple(float(b) for b in beta)
    return EnvelopeScan(best, arg, len(np.atleast_2d(betas)))


def dyadic_envelope_scan(P: float, betas: np.ndarray) -> EnvelopeScan:
    """Constant in |int_{P/2}^P e(b2 x^2 + b3 x^3) dx| <= c P (1+P^2|b2|+P^3|b3|)^{-1/2}."""
    return vest_envelope_scan((2, 3), P, betas, lower=P / 2, exponent=0.5)


# -- arcs ---------------------------------------------------------------------

@dataclass(frozen=True)
class ArcParams:
    X: float
    P: int
    Q: float | None = None
    sigma: float | None = None

    def __post_init__(self):
        Q = self.Q if self.Q is not None else self.X
        if not (1 <= self.X <= Q <= self.P):
            raise ValueError("need 1 <= X <= Q <= P")


@dataclass(frozen=True)
class ArcClass:
    major: bool
    q: int | None = None
    a: tuple[int, ...] | None = None


def classify_arc(alpha: Sequence[float], X: float, P: float, degrees: Sequence[int],
                 style: str = "M") -> ArcClass:
    """Least q <= X with |q alpha_i - a_i| <= X P^{-d_i} for all i (style "M"),
    or |alpha_i - a_i/q| <= X P^{-d_i} (style "N"); otherwise minor.

    Every q <= X is tested (vectorised), so the least q is exact; it is
    automatically coprime to a.
    """
    alpha = np.asarray(alpha, dtype=float)
    degrees = np.asarray(degrees, dtype=float)
    if alpha.shape != degrees.shape:
        raise ValueError("alpha and degrees lengths differ")
    qs = np.arange(1, int(math.floor(X)) + 1, dtype=float)
    if qs.size == 0:
        return ArcClass(False)
    qa = qs[:, None] * alpha[None, :]
    a = np.rint(qa)
    dist = np.abs(qa - a)
    box = X * P ** (-degrees)
    if style == "M":
        ok = np.all(dist <= box[None, :] * (1 + 1e-12), axis=1)
    elif style == "N":
        ok = np.all(dist <= qs[:, None] * box[None, :] * (1 + 1e-12), axis=1)
    else:
        raise ValueError("style must be 'M' or 'N'")
    hits = np.nonzero(ok)[0]
    if hits.size == 0:
        return ArcClass(False)
    i = int(hits[0])
    q = int(qs[i])
    return ArcClass(True, q, tuple(int(v) % q for v in a[i]))


@dataclass(frozen=True)
class GammaCoefficients:
    exponents: tuple[int, ...]          # distinct exponents, profile order
    gamma: np.ndarray                   # (s, w)


def _exponent_map(system: AdditiveSystem):
    prof = derive_profile(system)
    exps = prof.exponents()
    return exps, [exps.index(d) for d in system.degrees]


def gamma_transform(system: AdditiveSystem, alpha: Sequence) -> GammaCoefficients:
    """gamma_{j,e} = sum over equations i of degree e of c_ij alpha_i."""
    exps, col = _exponent_map(system)
    alpha = list(alpha)
    if len(alpha) != system.r:
        raise ValueError(f"alpha needs {system.r} entries")
    exact = all(isinstance(a, (int, Fraction)) for a in alpha)
    g = np.zeros((system.s, len(exps)), dtype=object if exact else float)
    if exact:
        g[:] = Fraction(0)
    for i, row in enumerate(system.coeffs):
        for j, c in enumerate(row):
            g[j, col[i]] += c * alpha[i]
    return GammaCoefficients(exps, g)


@dataclass(frozen=True)
class MajorArcApproximant:
    q: int
    a: tuple[int, ...]
    Lambda: np.ndarray      # (s, w) integers sum c_ij a_i
    delta: np.ndarray       # (s, w) reals sum c_ij beta_i

    @classmethod
    def build(cls, system: AdditiveSystem, alpha: Sequence[float], q: int,
              a: Sequence[int]) -> "MajorArcApproximant":
        beta = [al - ai / q for al, ai in zip(alpha, a)]
        Lam = gamma_transform(system, [int(x) for x in a]).gamma.astype(np.int64)
        delta = gamma_transform(system, [float(b) for b in beta]).gamma
        return cls(q, tuple(int(x) for x in a), Lam, delta)


@dataclass
class WeylReport:
    samples: int
    sigma: float
    max_stat: float                     # max of (M-th largest |f_j|) X^sigma / P
    mean_stat: float
    argmax_alpha: tuple[float, ...] | None
    quadcub_stat: float | None = None   # max of (M-th largest |f_j|) Q^{1/3} / P^{1+eps}
    rejected: int = 0
    rows: list[tuple] = field(default_factory=list)


def weyl_diagnostic(system: AdditiveSystem, arcs: ArcParams, sample_count: int,
                    seed: int = 0, sigma: float | None = None, eps: float = 0.0,
                    max_tries: int = 100) -> WeylReport:
    """Sample minor-arc points and record how small the M largest |f_j| get.

    For every M-tuple of indices one of the |f_j| should be at most
    P X^{-sigma}; the max over tuples of the min is the M-th largest |f_j|.
    Observational only.
    """
    prof = derive_profile(system)
    k = prof.k
    sigma = 0.25 / (2 * k) if sigma is None else sigma
    if sample_count <= 0:
        return WeylReport(0, sigma, 0.0, 0.0, None)
    rng = np.random.default_rng(seed)
    elems = np.arange(1, arcs.P + 1, dtype=np.int64)
    quadcub = set(system.degrees) <= {2, 3}
    Q = arcs.Q if arcs.Q is not None else arcs.X
    stats, rows, rejected = [], [], 0
    best, best_alpha, best_qc = -1.0, None, 0.0
    for _ in range(sample_count):
        for _try in range(max_tries):
            alpha = rng.random(system.r)
            if not classify_arc(alpha, arcs.X, arcs.P, system.degrees).major:
                break
            rejected += 1
        else:
            raise RuntimeError("could not sample a minor-arc point; X too large for P")
        G = gamma_transform(system, alpha)
        mags = np.sort(np.abs(weyl_sums(G.gamma, G.exponents, elems)))[::-1]
        mth = float(mags[min(prof.M, len(mags)) - 1])
        stat = mth * arcs.X ** sigma / arcs.P
        stats.append(stat)
        rows.append(tuple(alpha.tolist()) + (mth,))
        if stat > best:
            best, best_alpha = stat, tuple(alpha.tolist())
        if quadcub:
            best_qc = max(best_qc, mth * Q ** (1 / 3) / arcs.P ** (1 + eps))
    return WeylReport(sample_count, sigma, best, float(np.mean(stats)), best_alpha,
                      best_qc if quadcub else None, rejected, rows)
