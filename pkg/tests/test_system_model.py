import itertools
import json
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from diagsys.system_model import (AdditiveSystem, BudgetExceeded, SystemFormatError, bareiss_det,
                                  check_highly_nonsingular, derive_profile, parse_system,
                                  profile_ordered, serialize_system, system_to_json)


def test_parse_example():
    sys_ = parse_system("2 | 3: 1 1 1 ; 2: 1 1 -2")
    assert sys_.degrees == (3, 2)
    assert sys_.coeffs == ((1, 1, 1), (1, 1, -2))


def test_parse_reorders_rows_and_records_permutation():
    sys_ = parse_system("2: 1 2\n5: 3 4\n")
    assert sys_.degrees == (5, 2)
    assert sys_.coeffs == ((3, 4), (1, 2))
    assert sys_.input_order == (1, 0)


def test_zero_coefficient_reported_with_line():
    with pytest.raises(SystemFormatError) as err:
        parse_system("# header comment\n2: 1 1\n3: 1 0\n")
    assert "zero coefficient at (" in str(err.value)
    assert err.value.line == 3


@pytest.mark.parametrize("text", ["2: 1 1\n3: 1 1 1\n", "0: 1 1\n", "x: 1 2\n", "2: 1 a\n"])
def test_malformed_inputs(text):
    with pytest.raises(SystemFormatError):
        parse_system(text)


def test_json_mirror():
    sys_ = parse_system('{"degrees": [2, 3], "coeffs": [[1, -1], [2, 5]]}')
    assert sys_.degrees == (3, 2)
    again = parse_system(system_to_json(sys_))
    assert again.degrees == sys_.degrees and again.coeffs == sys_.coeffs
    assert json.loads(system_to_json(sys_))["degrees"] == [3, 2]


def _systems(max_r=3, max_s=6, max_d=5):
    return st.integers(1, max_r).flatmap(lambda r: st.integers(1, max_s).flatmap(
        lambda s: st.tuples(
            st.lists(st.integers(1, max_d), min_size=r, max_size=r),
            st.lists(st.lists(st.integers(-9, 9).filter(bool), min_size=s, max_size=s),
                     min_size=r, max_size=r))))


@given(_systems())
@settings(max_examples=150, deadline=None)
def test_serialize_round_trip(data):
    degrees, coeffs = data
    sys_ = AdditiveSystem.from_rows(degrees, coeffs)
    text = serialize_system(sys_)
    again = parse_system(text)
    assert again.degrees == sys_.degrees and again.coeffs == sys_.coeffs
    assert serialize_system(again) == text


def test_profile_kkn():
    k, n = 5, 3
    prof = derive_profile(AdditiveSystem.from_rows([k, k, n], [[1, 2], [3, 4], [5, 6]]))
    assert prof.t == 2 and prof.mu == (2, 1) and prof.nu == (1, 1)
    assert prof.M == 2 and prof.varpi == (1, 2) and prof.K == 2 * k + n


def test_profile_quadcub_and_single():
    prof = derive_profile(AdditiveSystem.from_rows([2, 3], [[1, 1], [1, 1]]))
    assert (prof.t, prof.mu, prof.nu, prof.K_partial, prof.K) == (1, (1,), (2,), (5,), 5)
    prof = derive_profile(AdditiveSystem((7,), ((1, -1),)))
    assert (prof.t, prof.mu, prof.nu, prof.K, prof.M) == (1, (1,), (1,), 7, 1)


@given(_systems(max_r=6, max_s=3, max_d=6))
@settings(max_examples=300, deadline=None)
def test_profile_invariants(data):
    degrees, coeffs = data
    sys_ = AdditiveSystem.from_rows(degrees, coeffs)
    prof = derive_profile(sys_)
    assert sum(m * n for m, n in zip(prof.mu, prof.nu)) == sys_.r == prof.r
    assert prof.K == sum(m * K for m, K in zip(prof.mu, prof.K_partial)) == sum(degrees)
    assert all(a > b for a, b in zip(prof.mu, prof.mu[1:]))
    flat = [e for level in prof.k_table for e in level]
    assert len(flat) == len(set(flat))
    assert all(list(level) == sorted(level) for level in prof.k_table)
    pdeg, pco = profile_ordered(sys_, prof)
    assert sorted(pdeg) == sorted(degrees)
    # every block of profile rows carries one exponent mu_l times
    for l, n, e, rows in prof.row_blocks():
        assert [pdeg[p] for p in rows] == [e] * prof.mu[l]
    assert sorted(prof.row_order) == list(range(sys_.r))


def _naive_det(m):
    n = len(m)
    if n == 1:
        return m[0][0]
    return sum((-1) ** j * m[0][j] * _naive_det([row[:j] + row[j + 1:] for row in m[1:]])
               for j in range(n))


@given(st.integers(1, 5).flatmap(
    lambda n: st.lists(st.lists(st.integers(-20, 20), min_size=n, max_size=n),
                       min_size=n, max_size=n)))
@settings(max_examples=200, deadline=None)
def test_bareiss_matches_cofactor_expansion(m):
    assert bareiss_det(m) == _naive_det(m)


def test_single_equation_always_holds():
    rep = check_highly_nonsingular(parse_system("3: 1 2 -3 4"))
    assert rep.holds and rep.witness is None


def test_two_quadratics_fail_with_witness():
    sys_ = parse_system("2: 1 1 1\n2: 1 1 2\n")
    rep = check_highly_nonsingular(sys_)
    assert not rep.holds
    l, n, e, rows, cols = rep.witness
    assert cols == (0, 1) and e == 2
    assert bareiss_det([[sys_.coeffs[i][j] for j in cols] for i in rows]) == 0


def _naive_nonsingular(sys_):
    by_degree = {}
    for d, row in zip(sys_.degrees, sys_.coeffs):
        by_degree.setdefault(d, []).append(row)
    for rows in by_degree.values():
        mu = len(rows)
        if mu > sys_.s:
            continue
        for cols in itertools.combinations(range(sys_.s), mu):
            m = np.array([[row[j] for j in cols] for row in rows], dtype=float)
            # integer entries are small, so a rounded float determinant is exact here
            if round(np.linalg.det(m)) == 0:
                return False
    return True


@given(st.integers(1, 3).flatmap(lambda r: st.integers(1, 8).flatmap(lambda s: st.tuples(
    st.lists(st.integers(2, 3), min_size=r, max_size=r),
    st.lists(st.lists(st.integers(-2, 2).filter(bool), min_size=s, max_size=s),
             min_size=r, max_size=r)))))
@settings(max_examples=300, deadline=None)
def test_exhaustive_agrees_with_naive_enumerator(data):
    sys_ = AdditiveSystem.from_rows(*data)
    assert check_highly_nonsingular(sys_).holds == _naive_nonsingular(sys_)


@given(st.integers(1, 3).flatmap(lambda r: st.integers(2, 6).flatmap(lambda s: st.tuples(
    st.lists(st.integers(2, 3), min_size=r, max_size=r),
    st.lists(st.lists(st.integers(-3, 3).filter(bool), min_size=s, max_size=s),
             min_size=r, max_size=r),
    st.integers(0, r - 1), st.integers(-4, 4).filter(bool)))))
@settings(max_examples=150, deadline=None)
def test_row_scaling_keeps_verdict(data):
    degrees, coeffs, i, lam = data
    sys_ = AdditiveSystem.from_rows(degrees, coeffs)
    assert check_highly_nonsingular(sys_).holds == \
        check_highly_nonsingular(sys_.scale_row(i, lam)).holds


def test_random_wide_matrix_against_naive():
    rnd = random.Random(7)
    coeffs = [[rnd.randint(1, 100) for _ in range(6)] for _ in range(2)]
    sys_ = AdditiveSystem((2, 2), tuple(map(tuple, coeffs)))
    assert check_highly_nonsingular(sys_).holds == _naive_nonsingular(sys_)


def test_randomized_mode_only_refutes():
    sys_ = parse_system("2: 1 1 1 1\n2: 1 1 2 3\n")
    rep = check_highly_nonsingular(sys_, mode="randomized", trials=200, seed=3)
    assert not rep.holds
    ok = check_highly_nonsingular(parse_system("2: 1 2 3\n2: 1 5 7\n"), mode="randomized")
    assert ok.holds and ok.mode == "randomized"


def test_exhaustive_budget():
    sys_ = AdditiveSystem((2, 2, 2), tuple(tuple(range(1, 31)) for _ in range(3)))
    with pytest.raises(BudgetExceeded):
        check_highly_nonsingular(sys_, budget=100)


def test_degree_one_warns():
    with pytest.warns(UserWarning):
        check_highly_nonsingular(parse_system("1: 1 -1"))
