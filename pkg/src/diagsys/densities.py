"""p-adic densities, the truncated singular series and the real density.

All p-adic quantities are exact (``int`` / ``Fraction``).  M(p^i) is
counted by a convolution over residue vectors; the convolutions run in
floating point FFTs on 15-bit limbs modulo a few primes below 2^30 and
are reassembled by CRT, so the count is exact (rounding is checked).
"""

from __future__ import annotations

import itertools
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from decimal import Decimal, localcontext
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy import fft as sp_fft

from .counting import _primes_upto
from .expsums import gamma_transform, v_unit_batch
from .system_model import AdditiveSystem, BudgetExceeded, check_highly_nonsingular


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def _moduli(count: int) -> list[int]:
    out, n = [], (1 << 30) - 1
    while len(out) < count:
        if _is_prime(n):
            out.append(n)
        n -= 2
    return out


_LIMB = 15
_NLIMBS = 2
_MOD_CACHE = _moduli(12)


# -- residue counting ---------------------------------------------------------

def _value_index(system: AdditiveSystem, j: int, q: int, xs: np.ndarray) -> np.ndarray:
    """Flattened index of (c_ij x^{d_i} mod q)_i in the (q,)*r grid."""
    idx = np.zeros(len(xs), dtype=np.int64)
    for i in range(system.r):
        c = system.coeffs[i][j] % q
        xp = np.ones(len(xs), dtype=np.int64)
        for _ in range(system.degrees[i]):
            xp = xp * xs % q
        idx = idx * q + (c * xp) % q
    return idx


def _distribution(system: AdditiveSystem, j: int, q: int) -> np.ndarray:
    xs = np.arange(q, dtype=np.int64)
    return np.bincount(_value_index(system, j, q, xs), minlength=q ** system.r)


def _negate_index(idx: np.ndarray, q: int, r: int) -> np.ndarray:
    digits = np.stack(np.unravel_index(idx, (q,) * r))
    return np.ravel_multi_index((-digits) % q, (q,) * r)


def _cyclic_conv_real(stack: np.ndarray, dist: np.ndarray, shape) -> np.ndarray:
    """Cyclic convolution over ``shape`` of every leading row of ``stack`` with ``dist``.

    Zero-pads each axis to a fast FFT length, then folds the linear result.
    """
    r = len(shape)
    axes = tuple(range(1, r + 1))
    padded = [sp_fft.next_fast_len(2 * n - 1, real=True) for n in shape]
    fd = sp_fft.rfftn(dist.reshape(shape).astype(float), s=padded)
    lin = sp_fft.irfftn(sp_fft.rfftn(stack, s=padded, axes=axes) * fd, s=padded, axes=axes)
    out = lin
    for ax, n in zip(axes, shape):
        head = np.take(out, np.arange(n), axis=ax)
        tail = np.take(out, np.arange(n, 2 * n - 1), axis=ax)
        pad = [(0, 0)] * out.ndim
        pad[ax] = (0, 1)
        out = head + np.pad(tail, pad)
    return out


def _modular_conv(state: np.ndarray, dist: np.ndarray, shape, mods: np.ndarray) -> np.ndarray:
    """Cyclic convolution of residue rows ``state`` (n_mod, L) with ``dist``, mod each row's modulus."""
    n_mod = state.shape[0]
    mask = (1 << _LIMB) - 1
    limbs = [(state >> (_LIMB * t)) & mask for t in range(_NLIMBS)]
    stack = np.stack(limbs).reshape((_NLIMBS * n_mod,) + tuple(shape)).astype(float)
    conv = _cyclic_conv_real(stack, dist, shape)
    rounded = np.rint(conv)
    if np.max(np.abs(conv - rounded)) > 0.2:
        raise ArithmeticError("FFT rounding too large for exact convolution")
    parts = rounded.astype(np.int64).reshape(_NLIMBS, n_mod, -1) % mods[None, :, None]
    out = parts[0]
    for t in range(1, _NLIMBS):
        out = (out + parts[t] * ((1 << (_LIMB * t)) % mods[:, None])) % mods[:, None]
    return out


def _crt_array(res: np.ndarray, mods: Sequence[int]) -> np.ndarray:
    """Elementwise CRT of residue rows; returns int64 when it fits, else Python ints."""
    mods = [int(m) for m in mods]
    if len(mods) == 1:
        return res[0].copy()
    if len(mods) == 2:
        m1, m2 = mods
        t = ((res[1] - res[0]) % m2) * pow(m1, -1, m2) % m2
        return res[0] + m1 * t
    x = res[0].astype(object)
    m = mods[0]
    for a, n in zip(res[1:], mods[1:]):
        t = ((a.astype(object) - x) % n) * pow(m, -1, n) % n
        x = x + m * t
        m *= n
    return x


def _crt(residues: Sequence[int], mods: Sequence[int]) -> int:
    x, m = 0, 1
    for a, n in zip(residues, mods):
        t = ((int(a) - x) * pow(m, -1, n)) % n
        x += m * t
        m *= n
    return x


def _half_counts(system: AdditiveSystem, cols: Sequence[int], q: int) -> np.ndarray:
    """Exact number of ways each residue vector is hit by the variables in ``cols``."""
    L = q ** system.r
    if not cols:
        out = np.zeros(L, dtype=np.int64)
        out[0] = 1
        return out
    first = _distribution(system, cols[0], q)
    if len(cols) == 1:
        return first
    bits = len(cols) * math.log2(q) + 1
    n_mod = int(math.ceil(bits / 29.9))
    mods = np.array(_MOD_CACHE[:n_mod], dtype=np.int64)
    shape = (q,) * system.r
    state = np.broadcast_to(first, (n_mod, L)) % mods[:, None]
    for j in cols[1:]:
        state = _modular_conv(state, _distribution(system, j, q), shape, mods)
    return _crt_array(state, mods.tolist())


def count_mod(system: AdditiveSystem, p: int, i: int, *, state_budget: int = 2_000_000) -> int:
    """M(p^i): solutions in (Z/p^i)^s of all r congruences, exactly.

    The variables are split in two halves; each half's residue distribution
    is built by convolution, and M is the number of pairs summing to zero.
    """
    if i < 0:
        raise ValueError("depth must be >= 0")
    if i == 0:
        return 1
    q = p ** i
    L = q ** system.r
    if L > state_budget:
        raise BudgetExceeded(f"residue grid {q}^{system.r} exceeds budget {state_budget}")
    cut = (system.s + 1) // 2
    left = _half_counts(system, list(range(cut)), q)
    right = _half_counts(system, list(range(cut, system.s)), q)
    neg = _negate_index(np.arange(L), q, system.r)
    return int(np.dot(left.astype(object), right[neg].astype(object)))


def count_mod_naive(system: AdditiveSystem, q: int) -> int:
    """Direct enumeration over (Z/q)^s; small cases only."""
    total = 0
    for x in itertools.product(range(q), repeat=system.s):
        if all(sum(c * pow(xj, d, q) for c, xj in zip(row, x)) % q == 0
               for d, row in zip(system.degrees, system.coeffs)):
            total += 1
    return total


def singular_series_term(system: AdditiveSystem, q: int) -> Fraction:
    """A(q) = q^{-s} sum_{a mod q, (q,a)=1} prod_j S(q, Lambda_j(a)), through exponential sums.

    Summed in floating point and rounded: q^s A(q) is an integer.
    """
    gm = gamma_transform(system, [0] * system.r)
    exps = gm.exponents
    x = np.arange(q, dtype=np.int64)
    xpow = []
    for k in exps:
        xp = np.ones(q, dtype=np.int64)
        for _ in range(k):
            xp = xp * x % q
        xpow.append(xp)
    roots = np.exp(2j * np.pi * np.arange(q) / q)
    total = 0j
    for a in itertools.product(range(q), repeat=system.r):
        if math.gcd(q, *a) != 1:
            continue
        lam = gamma_transform(system, list(a)).gamma
        prod = 1 + 0j
        for j in range(system.s):
            ph = np.zeros(q, dtype=np.int64)
            for col, xp in enumerate(xpow):
                ph = (ph + int(lam[j, col]) % q * xp) % q
            prod *= roots[ph].sum()
        total += prod
    if abs(total.imag) > 1e-6 * max(1.0, abs(total)):
        raise ArithmeticError("non-real exponential sum total")
    return Fraction(int(round(total.real)), q ** system.s)


# -- local densities ----------------------------------------------------------

@dataclass(frozen=True)
class DepthPolicy:
    max_depth: int = 6
    tolerance: float = 1e-9
    state_budget: int = 2_000_000

    def __post_init__(self):
        if self.max_depth < 1 or self.tolerance <= 0 or self.state_budget <= 0:
            raise ValueError("depth policy values must be positive")


@dataclass
class LocalDensity:
    p: int
    depth: int
    M_values: list[int]
    chi_estimates: list[Fraction]
    A_values: list[Fraction]
    hensel_certified: bool
    stabilized: bool
    witness: tuple[int, ...] | None = None

    @property
    def chi(self) -> Fraction:
        return self.chi_estimates[-1] if self.chi_estimates else Fraction(1)

    @property
    def depth_tail(self) -> float:
        """Heuristic size of sum_{j > depth} A(p^j).

        Fits a geometric decay to the last three nonzero |A(p^j)|; infinite
        when they do not decay.
        """
        if self.stabilized:
            return 0.0
        tail = [(j, abs(float(a))) for j, a in enumerate(self.A_values) if a != 0][-3:]
        if len(tail) < 2:
            return 0.0 if not tail else math.inf
        js, logs = zip(*((j, math.log(a)) for j, a in tail))
        ratio = math.exp(np.polyfit(js, logs, 1)[0])
        if ratio >= 1:
            return math.inf
        return tail[-1][1] * ratio / (1 - ratio)

    def telescoping_holds(self) -> bool:
        acc = Fraction(1)
        for A, chi in zip(self.A_values, self.chi_estimates):
            acc += A
            if acc != chi:
                return False
        return True

    def as_dict(self) -> dict:
        return {"p": self.p, "depth": self.depth, "chi": str(self.chi), "chi_float": float(self.chi),
                "M": self.M_values, "hensel_certified": self.hensel_certified,
                "stabilized": self.stabilized, "depth_tail": self.depth_tail}


def _rank_mod_p(rows: list[list[int]], p: int) -> int:
    m = [[v % p for v in row] for row in rows]
    rank, cols = 0, len(m[0]) if m else 0
    for c in range(cols):
        piv = next((r for r in range(rank, len(m)) if m[r][c]), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        inv = pow(m[rank][c], -1, p)
        m[rank] = [v * inv % p for v in m[rank]]
        for r in range(len(m)):
            if r != rank and m[r][c]:
                f = m[r][c]
                m[r] = [(a - f * b) % p for a, b in zip(m[r], m[rank])]
        rank += 1
    return rank


def _jacobian_mod_p(system: AdditiveSystem, x: Sequence[int], p: int) -> list[list[int]]:
    return [[d * c * pow(xj, d - 1, p) % p for c, xj in zip(row, x)]
            for d, row in zip(system.degrees, system.coeffs)]


def find_nonsingular_mod_p(system: AdditiveSystem, p: int, seed: int = 0, tries: int = 64,
                           state_budget: int = 2_000_000) -> tuple[int, ...] | None:
    """A solution mod p whose Jacobian has rank r over F_p, or None if none was found.

    Builds reachability layers over residues, then walks back from zero
    choosing random admissible values (preferring units).
    """
    r, s = system.r, system.s
    L = p ** r
    if L > state_budget:
        return None
    shape = (p,) * r
    xs = np.arange(p, dtype=np.int64)
    idx = [_value_index(system, j, p, xs) for j in range(s)]
    layers = [np.zeros(L, dtype=bool)]
    layers[0][0] = True
    for j in range(s):
        conv = _cyclic_conv_real(layers[-1].reshape((1,) + shape).astype(float),
                                 np.bincount(idx[j], minlength=L), shape)
        layers.append(conv.ravel() > 0.5)
    if not layers[s][0]:
        return None
    digits = [np.stack(np.unravel_index(ix, shape)) for ix in idx]
    rng = np.random.default_rng(seed)
    for _ in range(tries):
        target = np.zeros(r, dtype=np.int64)
        x = [0] * s
        for j in range(s - 1, -1, -1):
            prev = np.ravel_multi_index((target[:, None] - digits[j]) % p, shape)
            ok = np.nonzero(layers[j][prev])[0]
            units = ok[ok % p != 0]
            pool = units if units.size and rng.random() < 0.9 else ok
            pick = int(rng.choice(pool))
            x[j] = pick
            target = (target - digits[j][:, pick]) % p
        if _rank_mod_p(_jacobian_mod_p(system, x, p), p) == r:
            return tuple(x)
    return None


def chi_p(system: AdditiveSystem, p: int, policy: DepthPolicy | None = None,
          seed: int = 0) -> LocalDensity:
    """Local density at p from exact counts M(p^i), i = 1, 2, ... ."""
    if not _is_prime(p):
        raise ValueError(f"{p} is not prime")
    policy = policy or DepthPolicy()
    s, r = system.s, system.r
    witness = find_nonsingular_mod_p(system, p, seed, state_budget=policy.state_budget)
    certified = witness is not None
    Ms, chis, As = [], [], []
    prev, stabilized = Fraction(1), False
    for i in range(1, policy.max_depth + 1):
        if (p ** i) ** r > policy.state_budget:
            break
        M = count_mod(system, p, i, state_budget=policy.state_budget)
        chi = Fraction(M, p ** (i * (s - r)))
        A = chi - prev
        Ms.append(M)
        chis.append(chi)
        As.append(A)
        # a single small A(p^i) can be a parity accident (A(2) = 0 is common),
        # so both rules look at two consecutive depths
        if i >= 2 and (max(abs(As[-1]), abs(As[-2])) < policy.tolerance
                       or (certified and As[-1] == 0)):
            stabilized = True
            break
        prev = chi
    if not Ms:
        raise BudgetExceeded(f"cannot afford depth 1 at p={p}")
    return LocalDensity(p, len(Ms), Ms, chis, As, certified, stabilized, witness)


@dataclass
class SeriesReport:
    prime_bound: int
    factors: list[LocalDensity]
    product: Fraction
    provisional: bool
    tail_note: float
    tail_fit: tuple[float, float] | None     # (c, delta) in |chi_p - 1| ~ c p^{-1-delta}

    def product_decimal(self, digits: int = 40) -> str:
        with localcontext() as ctx:
            ctx.prec = digits
            return str(Decimal(self.product.numerator) / Decimal(self.product.denominator))


def _tail_estimate(factors: list[LocalDensity], prime_bound: int):
    pts = [(f.p, abs(float(f.chi) - 1.0)) for f in factors if f.p > 7 and f.chi != 1]
    if len(pts) < 3:
        pts = [(f.p, abs(float(f.chi) - 1.0)) for f in factors if f.p > 2 and f.chi != 1]
    if len(pts) < 2:
        return 0.0, None
    lp = np.log([p for p, _ in pts])
    ld = np.log([d for _, d in pts])
    slope, icpt = np.polyfit(lp, ld, 1)
    delta, c = -slope - 1.0, math.exp(icpt)
    if delta <= 0:
        return math.inf, (c, delta)
    upper = max(10 ** 6, 100 * prime_bound)
    ps = _primes_upto(upper)
    ps = ps[ps > prime_bound].astype(float)
    tail = float(np.sum(c * ps ** (-1.0 - delta)))
    # remainder beyond the sieve, by the prime number theorem
    tail += c * upper ** (-delta) / (delta * math.log(upper))
    return tail, (c, delta)


def singular_series(system: AdditiveSystem, prime_bound: int = 97,
                    policy: DepthPolicy | None = None, threads: int = 1,
                    seed: int = 0) -> SeriesReport:
    """prod_{p <= prime_bound} chi_p with a heuristic tail note."""
    if not check_highly_nonsingular(system).holds:
        warnings.warn("system is not highly non-singular; convergence is not assured")
    primes = [int(p) for p in _primes_upto(prime_bound)]
    policy = policy or DepthPolicy()

    def one(p):
        return chi_p(system, p, policy, seed)

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            factors = list(ex.map(one, primes))
    else:
        factors = [one(p) for p in primes]
    prod = Fraction(1)
    for f in factors:
        prod *= f.chi
    tail, fit = _tail_estimate(factors, prime_bound)
    provisional = not all(f.stabilized for f in factors)
    return SeriesReport(prime_bound, factors, prod, provisional, tail, fit)


# -- real density ---------------------------------------------------------------

@dataclass
class RealDensity:
    value: float
    stat_err: float
    extrap_err: float
    method: str
    ladder: list[tuple[float, float]] = field(default_factory=list)    # (eps, estimate)
    unstable: bool = False
    witness: tuple[float, ...] | None = None

    @property
    def error(self) -> float:
        return self.stat_err + self.extrap_err


def _theta(system: AdditiveSystem, x: np.ndarray) -> np.ndarray:
    C = np.asarray(system.coeffs, dtype=float)
    out = np.empty((x.shape[0], system.r))
    cache = {}
    for i, d in enumerate(system.degrees):
        if d not in cache:
            cache[d] = x ** d
        out[:, i] = cache[d] @ C[i]
    return out


def _jacobian_real(system: AdditiveSystem, x: np.ndarray) -> np.ndarray:
    C = np.asarray(system.coeffs, dtype=float)
    return np.stack([d * C[i] * x ** (d - 1) for i, d in enumerate(system.degrees)])


def refine_real_solution(system: AdditiveSystem, x0: np.ndarray, iters: int = 50):
    """Least-norm Newton from x0; returns a non-singular solution in (0,1)^s or None."""
    x = np.array(x0, dtype=float)
    for _ in range(iters):
        th = _theta(system, x[None, :])[0]
        if np.max(np.abs(th)) < 1e-13:
            break
        J = _jacobian_real(system, x)
        try:
            step = J.T @ np.linalg.solve(J @ J.T, th)
        except np.linalg.LinAlgError:
            return None
        x = x - step
    th = _theta(system, x[None, :])[0]
    # corner points where Theta vanishes trivially are limits, not interior solutions
    if np.max(np.abs(th)) > 1e-10 or np.any(x <= 1e-6) or np.any(x >= 1 - 1e-6):
        return None
    sv = np.linalg.svd(_jacobian_real(system, x), compute_uv=False)
    return tuple(x.tolist()) if sv.min() > 1e-6 * max(1.0, sv.max()) else None


def _gls(A: np.ndarray, y: np.ndarray, cov: np.ndarray):
    """Generalized least squares: coefficients and their covariance."""
    ci = np.linalg.pinv(cov)
    F = np.linalg.pinv(A.T @ ci @ A)
    return F @ A.T @ ci @ y, F


def chi_inf_volume(system: AdditiveSystem,
                   eps_ladder: Sequence[float] = (0.16, 0.08, 0.04, 0.02),
                   samples: int = 8_000_000, seed: int = 0, chunk: int = 250_000) -> RealDensity:
    """(2 eps)^{-r} vol{x in [0,1]^s : |Theta(x)| <= eps}, extrapolated to eps = 0.

    The cube boundary can put a |t| kink into the density of Theta at 0
    (x1^2 + x2^2 - x3^2 - x4^2 does), so the fit is a + b eps + c eps^2;
    half its distance from the eps^2-only fit is reported as extrapolation
    error.  With three ladder points only the eps^2 model is fitted.
    """
    eps = np.sort(np.asarray(eps_ladder, dtype=float))[::-1]
    if len(eps) < 2 or eps[-1] <= 0:
        raise ValueError("need at least two positive eps values")
    r = system.r
    rng = np.random.default_rng(seed)
    hits = np.zeros(len(eps), dtype=np.int64)
    witness_pool = []
    done = 0
    while done < samples:
        n = min(chunk, samples - done)
        x = rng.random((n, system.s))
        m = np.max(np.abs(_theta(system, x)), axis=1)
        for t, e in enumerate(eps):
            hits[t] += int(np.count_nonzero(m <= e))
        if len(witness_pool) < 20:
            witness_pool.extend(x[m <= eps[-1]][: 20 - len(witness_pool)])
        done += n
    scale = samples * (2 * eps) ** r
    est = hits / scale
    sig = np.sqrt(np.maximum(hits, 1)) / scale
    # windows are nested, so counts share their inner part: cov ~ min(hits)
    inner = np.maximum(np.minimum.outer(hits, hits), 1)
    cov = inner / np.outer(scale, scale)
    quad = np.stack([np.ones_like(eps), eps ** 2], axis=1)
    cq, Fq = _gls(quad, est, cov)
    if len(eps) >= 4:
        full = np.stack([np.ones_like(eps), eps, eps ** 2], axis=1)
        cf, Ff = _gls(full, est, cov)
        value, stat = float(cf[0]), float(np.sqrt(max(Ff[0, 0], 0.0)))
        extrap = 0.5 * abs(float(cf[0] - cq[0]))
    else:
        value, stat = float(cq[0]), float(np.sqrt(max(Fq[0, 0], 0.0)))
        e1, e2 = eps[-2], eps[-1]
        two = float((est[-1] * e1 ** 2 - est[-2] * e2 ** 2) / (e1 ** 2 - e2 ** 2))
        extrap = abs(two - value)
    # unstable: a reversal in the ladder where both steps exceed the noise
    diffs = np.diff(est)
    loud = np.abs(diffs) > 2 * (sig[1:] + sig[:-1])
    unstable = bool(np.any((diffs[1:] * diffs[:-1] < 0) & loud[1:] & loud[:-1]))
    witness = None
    for cand in witness_pool:
        witness = refine_real_solution(system, cand)
        if witness is not None:
            break
    return RealDensity(value, stat, extrap, "volume",
                       [(float(e), float(v)) for e, v in zip(eps, est)], unstable, witness)


def chi_inf_fourier(system: AdditiveSystem, beta_box: float = 60.0, panel: float = 0.25,
                    nodes: int = 16, batch: int = 512) -> RealDensity:
    """int over |beta_i| <= beta_box of prod_j int_0^1 e(Gamma_j(beta) . z^k) dz.

    r = 1 or 2. The truncated tail is estimated from the decay of the
    integrand at the box edge.
    """
    r = system.r
    if r > 2:
        raise ValueError("fourier method supports r <= 2")
    npan = int(math.ceil(2 * beta_box / panel))
    x, w = np.polynomial.legendre.leggauss(nodes)
    edges = np.linspace(-beta_box, beta_box, npan + 1)
    half = 0.5 * np.diff(edges)
    b1 = (0.5 * (edges[:-1] + edges[1:])[:, None] + half[:, None] * x[None, :]).ravel()
    w1 = (half[:, None] * w[None, :]).ravel()
    if r == 1:
        betas, weights = b1[:, None], w1
    else:
        B1, B2 = np.meshgrid(b1, b1, indexing="ij")
        betas = np.stack([B1.ravel(), B2.ravel()], axis=1)
        weights = np.outer(w1, w1).ravel()
    exps = gamma_transform(system, [0.0] * r).exponents
    # Gamma is linear in beta: Gamma_j(beta) = sum_i beta_i G_i[j]
    basis = [gamma_transform(system, [1.0 if t == i else 0.0 for t in range(r)]).gamma
             for i in range(r)]
    cols = {}
    for j in range(system.s):
        key = tuple(np.round(np.concatenate([b[j] for b in basis]), 12))
        cols.setdefault(key, []).append(j)
    total = 0j
    edge_vals = []
    for start in range(0, len(betas), batch):
        bt = betas[start:start + batch]
        prod = np.ones(len(bt), dtype=complex)
        for key, members in cols.items():
            G = sum(bt[:, i:i + 1] * basis[i][members[0]][None, :] for i in range(r))
            prod *= v_unit_batch(G, exps, nodes=nodes) ** len(members)
        total += np.dot(weights[start:start + batch], prod)
        near = np.max(np.abs(bt), axis=1) > 0.9 * beta_box
        edge_vals.extend(np.abs(prod[near]).tolist())
    k = max(system.degrees)
    decay = system.s / k
    edge = float(np.mean(edge_vals)) if edge_vals else 0.0
    if decay > r:
        tail = edge * beta_box ** r * (2 * r) / (decay - r) * 2
    else:
        tail = math.inf
    if abs(total.imag) > max(1e-6, 10 * tail):
        raise ArithmeticError(f"fourier estimate has imaginary part {total.imag:.3g}")
    return RealDensity(float(total.real), 0.0, tail, "fourier")


def chi_inf(system: AdditiveSystem, method: str = "volume", **kw) -> RealDensity:
    if method == "volume":
        return chi_inf_volume(system, **kw)
    if method == "fourier":
        return chi_inf_fourier(system, **kw)
    raise ValueError("method must be 'volume' or 'fourier'")


@dataclass
class DensityReport:
    chi_inf: RealDensity
    series: SeriesReport
    C: float
    C_rel_err: float
    positivity_flags: dict

    @property
    def prime_bound(self) -> int:
        return self.series.prime_bound

    @property
    def local(self) -> list[LocalDensity]:
        return self.series.factors

    @property
    def tail_note(self) -> float:
        return self.series.tail_note

    def recompute_C(self) -> float:
        return predicted_constant(self.chi_inf, self.series)[0]

    def as_dict(self) -> dict:
        return {
            "C": self.C, "C_rel_err": self.C_rel_err,
            "chi_inf": {"value": self.chi_inf.value, "stat_err": self.chi_inf.stat_err,
                        "extrap_err": self.chi_inf.extrap_err, "method": self.chi_inf.method,
                        "unstable": self.chi_inf.unstable},
            "series": {"product": self.series.product_decimal(), "prime_bound": self.prime_bound,
                       "provisional": self.series.provisional, "tail_note": self.tail_note},
            "locals": [f.as_dict() for f in self.local],
            "positivity_flags": self.positivity_flags,
        }


def predicted_constant(real: RealDensity, series: SeriesReport) -> tuple[float, float]:
    """C = chi_inf * prod chi_p, with relative errors added."""
    prod = float(series.product)
    C = real.value * prod
    if C == 0:
        return 0.0, 0.0
    depth = sum(abs(f.depth_tail) / float(f.chi) for f in series.factors if f.chi != 0)
    rel = real.error / abs(real.value) + series.tail_note + depth
    return C, rel


def density_report(system: AdditiveSystem, prime_bound: int = 97,
                   policy: DepthPolicy | None = None, method: str = "volume",
                   threads: int = 1, seed: int = 0, **chi_kw) -> DensityReport:
    series = singular_series(system, prime_bound, policy, threads, seed)
    if method == "volume":
        chi_kw.setdefault("seed", seed)
    real = chi_inf(system, method, **chi_kw)
    C, rel = predicted_constant(real, series)
    flags = {
        "real_nonsingular_solution": real.witness is not None if method == "volume" else None,
        "padic_all_certified": all(f.hensel_certified for f in series.factors),
        "padic_uncertified_primes": [f.p for f in series.factors if not f.hensel_certified],
    }
    return DensityReport(real, series, C, rel, flags)
