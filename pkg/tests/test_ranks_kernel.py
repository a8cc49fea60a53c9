from fractions import Fraction
from itertools import permutations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hidim.errors import BadIndexSet, CapacityExceeded, InvalidRank, NonFinite, TiesPresent
from hidim.ranks_kernel import (
    Dataset,
    RankMatrix,
    TiePolicy,
    build_kernel_table,
    compute_ranks,
    grid_cdf,
    kernel_centered,
    kernel_column,
    kernel_raw,
    moebius_process_eval,
)
from hidim.statistics import subset_statistic

F = Fraction


def _col(values):
    x = np.asarray(values, dtype=float)
    return np.column_stack([x, x])


def test_ranks_small_examples():
    assert compute_ranks(_col([0.3, 0.1, 0.5])).ranks[:, 0].tolist() == [2, 1, 3]
    assert compute_ranks(_col(np.linspace(0, 1, 7))).ranks[:, 0].tolist() == list(range(1, 8))


def test_ranks_ties():
    with pytest.raises(TiesPresent):
        compute_ranks(np.array([[0.5, 1.0], [0.5, 2.0]]))
    r = compute_ranks(np.array([[0.5, 1.0], [0.5, 2.0]]), TiePolicy.BY_ROW_INDEX)
    assert r.ranks[:, 0].tolist() == [1, 2]
    assert r.tie_flags.tolist() == [True, False]


def test_ranks_reject_non_finite():
    with pytest.raises(NonFinite):
        compute_ranks(np.array([[0.1, np.nan], [0.2, 0.3]]))
    with pytest.raises(NonFinite):
        Dataset(np.array([[np.inf, 0.0], [0.2, 0.3]]))


def test_rank_matrix_must_hold_permutations():
    with pytest.raises(InvalidRank):
        RankMatrix(np.array([[1, 1], [1, 2]]))


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 40), st.integers(2, 6), st.integers(0, 2**32 - 1))
def test_rank_columns_are_permutations(n, d, seed):
    x = np.random.default_rng(seed).standard_normal((n, d))
    r = compute_ranks(x).ranks
    assert np.array_equal(np.sort(r, axis=0), np.tile(np.arange(1, n + 1)[:, None], (1, d)))
    # max-rank definition
    assert np.array_equal(r, (x[None, :, :] <= x[:, None, :]).sum(axis=1))


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 30), st.integers(0, 2**32 - 1))
def test_rank_invariance_under_increasing_maps(n, seed):
    x = np.random.default_rng(seed).standard_normal((n, 3))
    y = np.column_stack([np.exp(x[:, 0]), 3 * x[:, 1] - 7, np.arctan(x[:, 2])])
    assert np.array_equal(compute_ranks(x).ranks, compute_ranks(y).ranks)


@pytest.mark.parametrize(
    "ri, rj, n, expected",
    [(1, 1, 2, F(1, 12)), (1, 2, 2, F(-1, 12)), (4, 4, 4, F(7, 40))],
)
def test_kernel_raw_values(ri, rj, n, expected):
    assert kernel_raw(ri, rj, n, exact=True) == expected
    assert kernel_raw(ri, rj, n) == pytest.approx(float(expected), abs=1e-15)


@pytest.mark.parametrize(
    "ri, rj, n, diag, expected",
    [(1, 2, 2, False, F(0)), (1, 1, 2, True, F(0)), (4, 4, 4, True, F(1, 20))],
)
def test_kernel_centered_values(ri, rj, n, diag, expected):
    assert kernel_centered(ri, rj, n, diag, exact=True) == expected


def test_kernel_rejects_bad_rank():
    with pytest.raises(InvalidRank):
        kernel_raw(0, 1, 3)
    with pytest.raises(InvalidRank):
        kernel_raw(1, 4, 3)


@settings(max_examples=100)
@given(st.integers(2, 200).flatmap(lambda n: st.tuples(st.just(n), st.integers(1, n), st.integers(1, n))))
def test_kernel_symmetric_and_bounded(args):
    n, a, b = args
    assert kernel_raw(a, b, n, exact=True) == kernel_raw(b, a, n, exact=True)
    assert -1 <= kernel_raw(a, b, n) <= 1


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_centered_kernel_averages_to_zero(n):
    perms = list(permutations(range(1, n + 1)))
    diag = sum((kernel_centered(p[0], p[0], n, True, exact=True) for p in perms), F(0))
    off = sum((kernel_centered(p[0], p[1], n, False, exact=True) for p in perms), F(0))
    assert diag == 0 and off == 0


def _xi_rhs(ri, rj, n):
    return F(1, 6 * n) + F(1, n + 1) * sum(
        ((1 if ri <= l else 0) - F(l, n)) * ((1 if rj <= l else 0) - F(l, n)) for l in range(1, n + 1)
    )


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_xi_identity_exact(n):
    for perm in permutations(range(1, n + 1)):
        for i in range(n):
            for j in range(n):
                if i != j:
                    assert kernel_centered(perm[i], perm[j], n, False, exact=True) == _xi_rhs(perm[i], perm[j], n)


@settings(max_examples=100)
@given(st.integers(2, 300).flatmap(lambda n: st.tuples(st.just(n), st.integers(1, n), st.integers(1, n))))
def test_xi_identity_float(args):
    n, a, b = args
    if a == b:
        return
    ell = np.arange(1, n + 1)
    rhs = 1 / (6 * n) + np.sum(((a <= ell) - ell / n) * ((b <= ell) - ell / n)) / (n + 1)
    assert abs(kernel_centered(a, b, n, False) - rhs) <= 1e-12


def test_kernel_table_small_examples():
    ranks = RankMatrix(np.array([[1, 1], [2, 2]]))
    tb = build_kernel_table(ranks)
    assert tb.value(0, 0, 0) == pytest.approx(1 / 12)
    assert tb.value(0, 1, 0) == pytest.approx(-1 / 12)
    assert tb.value(1, 0, 0) == pytest.approx(-1 / 12)
    assert tb.value(1, 1, 0) == pytest.approx(1 / 12)

    tb3 = build_kernel_table(RankMatrix(np.array([[1, 1], [2, 2], [3, 3]])))
    expected = {(0, 0): F(5, 36), (1, 1): F(1, 18), (2, 2): F(5, 36),
                (0, 1): F(-1, 36), (0, 2): F(-1, 9), (1, 2): F(-1, 36)}
    for (i, j), v in expected.items():
        assert tb3.value(i, j, 0) == pytest.approx(float(v), abs=1e-15)
        assert tb3.value(j, i, 1) == pytest.approx(float(v), abs=1e-15)


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 20), st.integers(0, 2**32 - 1))
def test_kernel_table_matches_scalar_kernel(n, seed):
    rng = np.random.default_rng(seed)
    ranks = compute_ranks(rng.random((n, 3)))
    raw = build_kernel_table(ranks)
    cen = build_kernel_table(ranks, centered=True)
    for p in range(3):
        full = raw.matrix(p)
        assert np.array_equal(full, full.T)
        assert np.all(np.abs(full) <= 1)
        for i in range(n):
            for j in range(n):
                a, b = ranks.ranks[i, p], ranks.ranks[j, p]
                assert full[i, j] == pytest.approx(kernel_raw(a, b, n), abs=1e-14)
                assert cen.value(i, j, p) == pytest.approx(kernel_centered(a, b, n, i == j), abs=1e-14)


def test_kernel_table_budget():
    ranks = compute_ranks(np.random.default_rng(0).random((50, 4)))
    with pytest.raises(CapacityExceeded):
        build_kernel_table(ranks, memory_budget=1000)


def test_kernel_column_matches_table():
    ranks = compute_ranks(np.random.default_rng(1).random((9, 2)))
    assert np.array_equal(kernel_column(ranks.ranks[:, 1]), build_kernel_table(ranks).values[1])


def test_grid_cdf():
    assert grid_cdf(0.0, 5) == 0.0
    assert grid_cdf(1.0, 5) == 1.0
    assert grid_cdf(0.5, 2) == 0.5
    assert grid_cdf(0.99, 2) == 1.0


def test_moebius_process_boundaries():
    ranks = compute_ranks(np.random.default_rng(3).random((8, 4)))
    assert moebius_process_eval(ranks, (0, 2), [0.0, 0.4]) == 0.0
    assert moebius_process_eval(ranks, (0, 1, 3), [1.0, 1.0, 1.0]) == 0.0


def test_moebius_process_small_example():
    ranks = RankMatrix(np.array([[1, 1], [2, 2]]))
    assert moebius_process_eval(ranks, (0, 1), [0.5, 0.5]) == pytest.approx(0.5 / np.sqrt(2), abs=1e-12)


def test_moebius_process_bad_index_set():
    ranks = compute_ranks(np.random.default_rng(3).random((5, 3)))
    with pytest.raises(BadIndexSet):
        moebius_process_eval(ranks, (0,), [0.3])
    with pytest.raises(BadIndexSet):
        moebius_process_eval(ranks, (0, 3), [0.3, 0.3])


def test_moebius_process_integrates_to_subset_statistic():
    # Monte Carlo integral of the squared process over the unit square
    rng = np.random.default_rng(20240611)
    ranks = compute_ranks(rng.random((10, 2)))
    draws = 10**6
    total = 0.0
    for _ in range(10):
        u = rng.random((draws // 10, 2))
        total += np.sum(moebius_process_eval(ranks, (0, 1), u) ** 2)
    estimate = total / draws
    exact = subset_statistic(build_kernel_table(ranks), (0, 1))
    assert abs(estimate - exact) / exact <= 0.02
