import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from diagsys.counting import RangeSpec, enumerate_range
from diagsys.expsums import (ArcParams, MajorArcApproximant, classify_arc, complete_sum_S,
                             dickman_rho, dyadic_envelope_scan, f_eval, gamma_transform,
                             sqa_bound_scan, v_integral, v_unit_batch, vest_envelope_scan,
                             weyl_diagnostic)
from diagsys.system_model import parse_system


def direct_sum(gamma, k_vec, xs):
    # phase reduced mod 1 exactly before exponentiating
    total = 0j
    for x in xs:
        ph = sum(g * x ** k for g, k in zip(gamma, k_vec)) % 1
        total += complex(mpmath.expjpi(2 * mpmath.mpf(ph.numerator) / ph.denominator))
    return total


# -- Weyl sums -----------------------------------------------------------------------

def test_f_eval_zero_phase():
    assert f_eval([0, 0], (2, 3), RangeSpec("full", 37)) == 37
    rng = RangeSpec("smooth", 100, 0.5)
    assert f_eval([0.0], (2,), rng) == len(enumerate_range(rng))


def test_f_eval_periodicity_matches_complete_sum():
    q, m = 5, 3
    for a in range(q):
        gamma = [Fraction(a, q)]
        oracle = direct_sum(gamma, (2,), range(1, q + 1))
        assert complete_sum_S(q, [a], (2,)) == pytest.approx(oracle, abs=1e-12)
        assert f_eval(gamma, (2,), RangeSpec("full", q * m)) == pytest.approx(m * oracle, abs=1e-11)


@given(st.lists(st.floats(-1, 1, allow_nan=False), min_size=2, max_size=2),
       st.integers(-3, 3), st.integers(0, 1))
@settings(max_examples=60, deadline=None)
def test_f_eval_conjugate_and_shift(gamma, shift, coord):
    rng = RangeSpec("full", 40)
    base = f_eval(gamma, (2, 3), rng)
    assert f_eval([-g for g in gamma], (2, 3), rng) == pytest.approx(base.conjugate(), abs=1e-9)
    moved = list(gamma)
    moved[coord] += shift
    assert f_eval(moved, (2, 3), rng) == pytest.approx(base, abs=1e-8)
    assert abs(base) <= 40 + 1e-9


def test_float_and_exact_paths_agree():
    g = [Fraction(3, 7), Fraction(-2, 11)]
    exact = f_eval(g, (2, 3), RangeSpec("full", 200))
    approx = f_eval([float(x) for x in g], (2, 3), RangeSpec("full", 200))
    assert exact == pytest.approx(approx, abs=1e-8)
    assert exact == pytest.approx(direct_sum(g, (2, 3), range(1, 201)), abs=1e-9)


# -- Gamma transform -------------------------------------------------------------------

def test_gamma_transform_examples():
    sys_ = parse_system("2: 1 1 -2")
    G = gamma_transform(sys_, [Fraction(1, 3)])
    assert [row[0] for row in G.gamma] == [Fraction(1, 3), Fraction(1, 3), Fraction(-2, 3)]
    assert not np.any(gamma_transform(sys_, [0]).gamma.astype(float))


@given(st.lists(st.floats(-5, 5, allow_nan=False), min_size=3, max_size=3),
       st.lists(st.floats(-5, 5, allow_nan=False), min_size=3, max_size=3))
@settings(max_examples=50, deadline=None)
def test_gamma_transform_linear(a, b):
    sys_ = parse_system("3: 1 2 -1 4\n3: 2 -1 1 1\n2: 1 1 1 -3")
    ga, gb = gamma_transform(sys_, a).gamma, gamma_transform(sys_, b).gamma
    gab = gamma_transform(sys_, [x + y for x, y in zip(a, b)]).gamma
    assert np.allclose(gab, ga + gb, atol=1e-9)
    # recompute from the definition
    exps = gamma_transform(sys_, a).exponents
    for j in range(sys_.s):
        for n, e in enumerate(exps):
            want = sum(c[j] * al for d, c, al in zip(sys_.degrees, sys_.coeffs, a) if d == e)
            assert ga[j, n] == pytest.approx(want, abs=1e-9)


def test_major_arc_approximant_delta():
    sys_ = parse_system("3: 1 2 -1 4\n2: 1 1 1 -3")
    alpha = [0.3342, 0.2501]
    apx = MajorArcApproximant.build(sys_, alpha, 3, [1, 1])
    G = gamma_transform(sys_, alpha).gamma
    assert np.allclose(apx.delta, G - apx.Lambda / 3)


# -- complete sums -----------------------------------------------------------------------

def test_complete_sum_examples():
    assert complete_sum_S(7, [0], (3,)) == pytest.approx(7)
    assert complete_sum_S(2, [1], (2,)) == pytest.approx(0, abs=1e-12)
    assert complete_sum_S(1, [5], (2,)) == pytest.approx(1)


@pytest.mark.parametrize("k_vec", [(2,), (3,), (2, 3)])
def test_complete_sum_crt(k_vec):
    # x = q2 u + q1 v splits S(q1 q2, a1 q2 + a2 q1) = S(q1, a1 q2^k) S(q2, a2 q1^k)
    q1, q2 = 3, 4
    for a1 in range(q1):
        for a2 in range(q2):
            lhs = direct_sum([Fraction(a1 * q2 + a2 * q1, q1 * q2)] * len(k_vec), k_vec,
                             range(1, q1 * q2 + 1))
            rhs = (complete_sum_S(q1, [a1 * q2 ** k for k in k_vec], k_vec)
                   * complete_sum_S(q2, [a2 * q1 ** k for k in k_vec], k_vec))
            got = complete_sum_S(q1 * q2, [a1 * q2 + a2 * q1] * len(k_vec), k_vec)
            assert got == pytest.approx(lhs, abs=1e-10)
            assert got == pytest.approx(rhs, abs=1e-10)


@pytest.mark.parametrize("q,k", [(9, 2), (12, 3), (16, 2), (25, 3)])
def test_complete_sum_unit_invariance(q, k):
    mods = sorted(round(abs(complete_sum_S(q, [a], (k,))), 9) for a in range(q))
    for u in range(1, q):
        if math.gcd(u, q) == 1:
            assert sorted(round(abs(complete_sum_S(q, [u * a % q], (k,))), 9)
                          for a in range(q)) == mods
    assert all(m <= q + 1e-9 for m in mods)


def test_sqa_scan_properties():
    full = sqa_bound_scan(200, (2,))
    assert 1 <= full.max_ratio <= 2
    assert all(b >= a - 1e-12 for a, b in zip(full.per_q, np.maximum.accumulate(full.per_q)))
    prefix = [sqa_bound_scan(q, (2,)).max_ratio for q in (5, 20, 60)]
    assert prefix == sorted(prefix) and prefix[-1] <= full.max_ratio
    # S(q,a) for quadratic is a Gauss sum, |S| <= sqrt(2 q (q, a))
    assert full.max_ratio == pytest.approx(math.sqrt(2), abs=1e-9)
    assert sqa_bound_scan(1, (3,)).max_ratio == pytest.approx(1.0)


# -- Dickman's function ------------------------------------------------------------------

def test_dickman_elementary_range():
    assert dickman_rho(0.0) == 1 and dickman_rho(1) == 1
    assert dickman_rho(2) == pytest.approx(1 - math.log(2), abs=1e-6)
    assert dickman_rho(1.5) == pytest.approx(1 - math.log(1.5), abs=1e-12)
    with pytest.raises(ValueError):
        dickman_rho(-0.5)


def test_dickman_three_against_two_oracles():
    closed = (1 - (1 - mpmath.log(2)) * mpmath.log(3) + mpmath.polylog(2, -2)
              + mpmath.pi ** 2 / 12)
    quad, _ = integrate.quad(lambda t: (1 - math.log(t - 1)) / t, 2, 3, epsabs=1e-14)
    assert float(closed) == pytest.approx(1 - math.log(2) - quad, abs=1e-12)
    assert dickman_rho(3.0) == pytest.approx(float(closed), abs=1e-5)


def test_dickman_four_against_nested_quadrature():
    rho3 = lambda t: float(1 - (1 - mpmath.log(t - 1)) * mpmath.log(t)  # noqa: E731
                           + mpmath.polylog(2, 1 - t) + mpmath.pi ** 2 / 12)
    quad, _ = integrate.quad(lambda t: rho3(t - 1) / t, 3, 4, epsabs=1e-13)
    assert dickman_rho(4.0) == pytest.approx(dickman_rho(3.0) - quad, abs=1e-7)


def test_dickman_shape():
    u = np.linspace(0, 8, 4001)
    r = dickman_rho(u)
    assert np.all(np.diff(r) <= 1e-15) and np.all(r > 0)
    h = 0.01
    grid = np.linspace(h, 5, 2000)
    assert np.all(np.abs(dickman_rho(grid) - dickman_rho(grid - h)) <= h)


# -- oscillatory integrals --------------------------------------------------------------

def _quad_oracle(beta, k_vec, a, b, weight=lambda z: 1.0):
    phase = lambda z: 2 * math.pi * sum(bt * z ** k for bt, k in zip(beta, k_vec))  # noqa: E731
    pts = np.linspace(a, b, 200)[1:-1]
    re, _ = integrate.quad(lambda z: weight(z) * math.cos(phase(z)), a, b, points=pts,
                           limit=4000, epsabs=1e-11)
    im, _ = integrate.quad(lambda z: weight(z) * math.sin(phase(z)), a, b, points=pts,
                           limit=4000, epsabs=1e-11)
    return complex(re, im)


def test_v_integral_zero_phase():
    assert v_integral([0.0], (2,), 37.0) == pytest.approx(37.0)
    assert v_integral([0.0, 0.0], (2, 3), 20.0, lower=10.0) == pytest.approx(10.0)


@pytest.mark.parametrize("beta,k_vec,P", [([0.003], (2,), 20.0), ([-0.0101], (2,), 30.0),
                                          ([0.002, -1e-4], (2, 3), 25.0),
                                          ([2e-5, 3e-5], (2, 3), 60.0)])
def test_v_integral_against_scipy(beta, k_vec, P):
    got = v_integral(beta, k_vec, P)
    want = _quad_oracle(beta, k_vec, 0.0, P)
    assert abs(got - want) <= 1e-6 * max(1.0, abs(want))
    assert abs(got) <= P + 1e-9


def test_weighted_integral_against_scipy():
    beta, R, P = [0.001], 5.0, 60.0
    got = v_integral(beta, (2,), P, smooth_weighted=True, R=R)
    want = _quad_oracle(beta, (2,), R, P, weight=lambda z: dickman_rho(math.log(z) / math.log(R)))
    assert abs(got - want) <= 1e-6 * max(1.0, abs(want))


def test_weighted_reduces_to_unweighted_below_R():
    # rho(log z / log R) = 1 for z <= R, so over [1, R] the weight disappears
    beta, R = [0.01], 20.0
    w = v_integral(beta, (2,), R, smooth_weighted=True, R=R, lower=1.0)
    assert w == pytest.approx(v_integral(beta, (2,), R, lower=1.0), abs=1e-9)
    assert v_integral(beta, (2,), R, smooth_weighted=True, R=R) == 0


def test_unit_batch_matches_adaptive():
    gam = np.array([[0.3, -1.2], [2.0, 0.5], [0.0, 0.0]])
    batch = v_unit_batch(gam, (1, 2))
    for row, val in zip(gam, batch):
        assert val == pytest.approx(v_integral(row, (1, 2), 1.0), abs=1e-9)


def test_envelope_constants_bounded():
    P = 20.0
    betas = np.array([[s * 10.0 ** e] for e in np.linspace(-5, 0, 11) for s in (1, -1)])
    assert vest_envelope_scan((2,), P, betas).max_constant <= 10
    grid = np.array([[b2, b3] for b2 in (0, 1e-4, -1e-3, 1e-2) for b3 in (0, 2e-6, -5e-5, 1e-3)])
    assert dyadic_envelope_scan(P, grid).max_constant <= 10


# -- arcs ---------------------------------------------------------------------------

def test_arc_params_validation():
    ArcParams(X=2, P=10, Q=5)
    with pytest.raises(ValueError):
        ArcParams(X=20, P=10)
    with pytest.raises(ValueError):
        ArcParams(X=4, P=100, Q=2)


def test_classify_examples():
    assert classify_arc([0.0], 4, 100, (2,)) == classify_arc([0.0], 4, 100, (2,))
    c = classify_arc([0.0, 0.0], 4, 100, (2, 3))
    assert c.major and c.q == 1 and c.a == (0, 0)
    X, P = 4, 100
    assert not classify_arc([0.5 + 2 * X * P ** -2.0], X, P, (2,)).major
    assert classify_arc([0.5 + 0.1 * X * P ** -2.0], X, P, (2,)).q == 2


def _brute_classify(alpha, X, P, degrees, style):
    for q in range(1, int(X) + 1):
        a = [round(q * x) for x in alpha]
        for al, ai, d in zip(alpha, a, degrees):
            lim = X * P ** -d * (q if style == "N" else 1)
            if abs(q * al - ai) > lim * (1 + 1e-12):
                break
        else:
            return q, tuple(ai % q for ai in a)
    return None


def test_classify_against_brute_force():
    rnd = np.random.default_rng(5)
    for _ in range(400):
        r = int(rnd.integers(1, 3))
        X = float(rnd.integers(1, 51))
        P = float(rnd.integers(int(X), 400))
        degrees = tuple(int(d) for d in rnd.integers(1, 4, size=r))
        # half the points near a random rational so major arcs actually occur
        if rnd.random() < 0.5:
            q = int(rnd.integers(1, int(X) + 1))
            alpha = (rnd.integers(0, q, size=r) + rnd.normal(0, X / P ** 2, size=r)) / q % 1.0
        else:
            alpha = rnd.random(r)
        style = "M" if rnd.random() < 0.5 else "N"
        got = classify_arc(alpha, X, P, degrees, style)
        want = _brute_classify(list(alpha), X, P, degrees, style)
        assert (got.q, got.a) == (want if want else (None, None))


def test_major_boxes_disjoint_r1():
    P, d = 100, 2
    X = 0.25 * P ** (d / 2)
    centers, half = [], []
    for q in range(1, int(X) + 1):
        for a in range(q + 1):
            if math.gcd(a, q) == 1:
                centers.append(a / q)
                half.append(X * P ** -d / q)
    order = np.argsort(centers)
    c, h = np.array(centers)[order], np.array(half)[order]
    assert np.all(c[1:] - h[1:] > c[:-1] + h[:-1])


def test_weyl_diagnostic_deterministic_and_empty():
    sys_ = parse_system("2: 1 1 -1 -1 1")
    arcs = ArcParams(X=4, P=50)
    a = weyl_diagnostic(sys_, arcs, 200, seed=3)
    b = weyl_diagnostic(sys_, arcs, 200, seed=3)
    assert a.max_stat == b.max_stat and a.rows == b.rows
    assert a.samples == 200 and 0 < a.max_stat and a.sigma == pytest.approx(1 / 16)
    for row in a.rows:
        assert not classify_arc(row[:-1], 4, 50, sys_.degrees).major
    empty = weyl_diagnostic(sys_, arcs, 0)
    assert empty.samples == 0 and empty.rows == []
