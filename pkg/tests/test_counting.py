import itertools
import random
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from diagsys.counting import (CountCache, RangeSpec, _mitm_count_py, count_solutions,
                              enumerate_range, make_partition, mean_value_diagnostic,
                              mean_value_I, mean_value_J, slope_estimate)
from diagsys.system_model import AdditiveSystem, BudgetExceeded, derive_profile, parse_system


def naive_count(sys_, elems):
    return sum(1 for x in itertools.product(elems, repeat=sys_.s)
               if all(v == 0 for v in sys_.evaluate(x)))


def test_enumerate_range_examples():
    assert enumerate_range(RangeSpec("full", 5)).tolist() == [1, 2, 3, 4, 5]
    assert enumerate_range(RangeSpec("dyadic", 9)).tolist() == [5, 6, 7, 8, 9]
    # R = floor(10 ** 0.30103) = 2
    assert enumerate_range(RangeSpec("smooth", 10, 0.30103)).tolist() == [1, 2, 4, 8]


def _smooth_by_trial_division(P, R):
    out = []
    for n in range(1, P + 1):
        m, p, big = n, 2, 1
        while p * p <= m:
            while m % p == 0:
                m //= p
                big = p
            p += 1
        if max(big, m) <= R:
            out.append(n)
    return out


@pytest.mark.parametrize("P,eta", [(200, 0.5), (1000, 0.25), (997, 0.6), (64, 1.0)])
def test_smooth_sieve_matches_trial_division(P, eta):
    rng = RangeSpec("smooth", P, eta)
    assert enumerate_range(rng).tolist() == _smooth_by_trial_division(P, rng.R)


def test_smooth_count_at_one_million_matches_prime_sum():
    # n <= x is sqrt(x)-smooth unless it has exactly one prime factor p > sqrt(x)
    from diagsys.counting import _primes_upto
    x = 10 ** 6
    p = _primes_upto(x)
    expected = x - int((x // p[p > 1000]).sum())
    assert len(enumerate_range(RangeSpec("smooth", x, 0.5))) == expected == 344299


def test_range_validation():
    with pytest.raises(ValueError):
        RangeSpec("smooth", 10)
    with pytest.raises(ValueError):
        RangeSpec("full", 0)
    with pytest.raises(BudgetExceeded):
        enumerate_range(RangeSpec("full", 100), budget=10)


def test_quaternary_example_by_representation_numbers():
    sys_ = parse_system("2: 1 1 -1 -1")
    reps = Counter(a * a + b * b for a in range(1, 11) for b in range(1, 11))
    expected = sum(c * c for c in reps.values())
    for method in ("brute", "mitm"):
        assert count_solutions(sys_, RangeSpec("full", 10), method).count == expected == 210


@pytest.mark.parametrize("k", [1, 2, 3, 5])
def test_diagonal_and_positive_examples(k):
    P = 17
    assert count_solutions(parse_system(f"{k}: 1 -1"), RangeSpec("full", P)).count == P
    assert count_solutions(parse_system(f"{k}: 1 2 3"), RangeSpec("full", P)).count == 0


def _random_system(rnd):
    r = rnd.randint(1, 2)
    s = rnd.randint(1, 6)
    degrees = [rnd.randint(1, 4) for _ in range(r)]
    coeffs = [[rnd.choice([-3, -2, -1, 1, 2, 3]) for _ in range(s)] for _ in range(r)]
    return AdditiveSystem.from_rows(degrees, coeffs), rnd.randint(1, 12)


def test_mitm_brute_and_python_fallback_agree():
    rnd = random.Random(11)
    for _ in range(30):
        sys_, P = _random_system(rnd)
        if P ** sys_.s > 3 * 10 ** 5:
            P = 4
        elems = enumerate_range(RangeSpec("full", P))
        mitm = count_solutions(sys_, RangeSpec("full", P), "mitm").count
        assert mitm == count_solutions(sys_, RangeSpec("full", P), "brute").count
        assert mitm == _mitm_count_py(sys_, elems.tolist(), sys_.s // 2)
        if P ** sys_.s <= 5000:
            assert mitm == naive_count(sys_, elems.tolist())


def test_result_independent_of_split():
    sys_ = parse_system("3: 1 1 -1 -2 1\n2: 1 -1 1 -1 1")
    rng = RangeSpec("full", 9)
    counts = {count_solutions(sys_, rng, split=k).count for k in range(0, 6)}
    assert len(counts) == 1


@given(st.permutations(range(5)), st.integers(-3, 3).filter(bool), st.booleans())
@settings(max_examples=40, deadline=None)
def test_count_invariances(perm, lam, swap):
    sys_ = AdditiveSystem.from_rows([2, 2], [[1, 2, -1, -2, 1], [1, -1, 3, -2, -1]])
    rng = RangeSpec("full", 8)
    base = count_solutions(sys_, rng).count
    assert count_solutions(sys_.permute_columns(perm), rng).count == base
    assert count_solutions(sys_.scale_row(1, lam), rng).count == base
    if swap:
        swapped = AdditiveSystem.from_rows([2, 2], [sys_.coeffs[1], sys_.coeffs[0]])
        assert count_solutions(swapped, rng).count == base


def test_large_values_fall_back_exactly():
    # 7th powers of numbers up to 600 overflow the int64 pre-check
    sys_ = parse_system("7: 1 1 -1 -1")
    rng = RangeSpec("full", 600)
    # only (x, y, x, y) and (x, y, y, x); equal sums of two 7th powers are unknown this small
    assert 600 ** 7 > np.iinfo(np.int64).max
    assert count_solutions(sys_, rng).count == 2 * 600 * 600 - 600


def test_cache_round_trip(tmp_path):
    cache = CountCache(tmp_path)
    sys_ = parse_system("2: 1 1 -1 -1")
    rng = RangeSpec("full", 12)
    first = count_solutions(sys_, rng, cache=cache)
    second = count_solutions(sys_, rng, cache=cache)
    assert first.count == second.count
    assert second.wall_time == pytest.approx(first.wall_time, abs=1e-6)
    assert len(list(tmp_path.iterdir())) == 1
    rec = first.as_record()
    assert set(rec) >= {"digest", "P", "count", "method", "seconds"}


@pytest.mark.parametrize("k", [2, 3, 5])
@pytest.mark.parametrize("P", [10, 100, 1000])
def test_J_one(k, P):
    assert mean_value_J(1, (k,), RangeSpec("full", P)).count == P


def test_J_vinogradov_degree_two_one():
    assert mean_value_J(1, (1, 2), RangeSpec("full", 50)).count == 50


@pytest.mark.parametrize("P", [5, 12, 30])
def test_J22_against_brute_force(P):
    squares = np.arange(1, P + 1) ** 2
    sums = (squares[:, None] + squares[None, :]).ravel()
    _, counts = np.unique(sums, return_counts=True)
    assert mean_value_J(2, (2,), RangeSpec("full", P)).count == int((counts ** 2).sum())


def test_J_invariant_under_exponent_order():
    rng = RangeSpec("full", 15)
    assert mean_value_J(3, (1, 3), rng).count == mean_value_J(3, (3, 1), rng).count


def test_J_smooth_range_matches_direct_count():
    rng = RangeSpec("smooth", 60, 0.5)
    elems = enumerate_range(rng).tolist()
    direct = sum(1 for a, b, c, d in itertools.product(elems, repeat=4)
                 if a ** 3 + b ** 3 == c ** 3 + d ** 3)
    assert mean_value_J(2, (3,), rng).count == direct


def test_slope_estimate_examples():
    fit = slope_estimate([(P, mean_value_J(1, (3,), RangeSpec("full", P)).count)
                          for P in (10, 20, 40, 80)])
    assert fit.slope == pytest.approx(1.0, abs=0.01)
    assert slope_estimate([(1, 5), (2, 5), (4, 5)]).slope == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValueError):
        slope_estimate([(1, 1), (2, 0), (3, 4)])
    with pytest.raises(ValueError):
        slope_estimate([(1, 1), (2, 2)])


def test_mean_value_I_delegates_and_matches_brute():
    sys_ = parse_system("3: 1 -1 1 -1 1 -1 1 -1 1 -1 1\n2: 1 1 -1 -1 1 1 -1 -1 1 -1 -1")
    part = make_partition(derive_profile(sys_), (5,), sys_.s)
    assert part.s0 == 5 and len(part.B0) == 1
    blocked = sys_.restrict(part.blocked_columns())
    at8 = mean_value_I(sys_, part, RangeSpec("full", 8)).count
    assert at8 == count_solutions(blocked, RangeSpec("full", 8)).count
    at4 = mean_value_I(sys_, part, RangeSpec("full", 4), method="brute").count
    assert at4 == count_solutions(blocked, RangeSpec("full", 4), "mitm").count


def test_mean_value_I_at_P_one():
    sys_ = parse_system("2: 1 -1 2 -2")
    part = make_partition(derive_profile(sys_), (2,), sys_.s)
    assert mean_value_I(sys_, part, RangeSpec("full", 1)).count == 1
    sys2 = parse_system("2: 1 1 2 -2")
    assert mean_value_I(sys2, make_partition(derive_profile(sys2), (2,), 4),
                        RangeSpec("full", 1)).count == 0


def test_partition_errors():
    sys_ = parse_system("2: 1 -1 2 -2")
    with pytest.raises(ValueError):
        make_partition(derive_profile(sys_), (3,), sys_.s)
    with pytest.raises(ValueError):
        make_partition(derive_profile(sys_), (1, 1), sys_.s)


def test_block_decoupling_diagnostic_runs():
    sys_ = parse_system("3: 1 -1 1 -1 1 -1 1 -1 1 -1 1\n2: 1 1 -1 -1 1 1 -1 -1 1 -1 -1")
    rows = mean_value_diagnostic(sys_, (5,), [4, 6, 8, 10])
    assert [r["P"] for r in rows] == [4, 6, 8, 10]
    assert all(r["I"] > 0 and r["J"][0] > 0 for r in rows)
    # observational: I never exceeds J (Cauchy-Schwarz for a single block)
    assert all(r["log_ratio"] <= 1e-12 for r in rows)
