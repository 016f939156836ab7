import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gapforge.discrepancy import (BoxOverflow, GridTooCoarse, HitStatus, NotFound, cardinality_band, charfn,
                                  decay_profile, fitted_decay_constant, hit_target_approx, hit_target_exact,
                                  pmf_convolution, pmf_fourier, subsample)
from gapforge.oracles import brute_force_pmf, brute_force_subsets

int_matrix = st.integers(1, 2).flatmap(
    lambda m: st.integers(1, 10).flatmap(
        lambda n: st.lists(st.lists(st.integers(-2, 2), min_size=n, max_size=n), min_size=m, max_size=m)))


def test_cardinality_band():
    assert cardinality_band(0.05, 300) == (8, 22)
    assert cardinality_band(0.1, 40) == (2, 6)
    assert cardinality_band(0.5, 1) == (1, 0)


# ---------------------------------------------------------------- subsampling

def test_columns_at_the_mean_keep_zero_sum():
    cols = np.zeros((2, 2000), dtype=np.int64)
    tr = subsample(cols, [0, 0], 1.0, 0.5, coin_seed=3)
    assert np.all(tr.running_sum == 0)
    assert np.all(tr.inner_sign == 0)
    # every decision is a tie, so acceptance is a fair coin per column
    assert 900 <= len(tr.selected) <= 1100


def test_three_column_example():
    cols = np.array([[1, 1, -1]])
    seen_first = seen_skip = False
    for seed in range(64):
        tr = subsample(cols, [0], 1.0, 1.0, coin_seed=seed)
        if tr.accepted[0]:
            seen_first = True
            assert tr.accepted.tolist() == [True, False, True]
            assert tr.running_sum.tolist() == [0.0]
        else:
            seen_skip = True
            # second column is again a tie; the third is taken whenever the sum is +1
            if tr.accepted[1]:
                assert tr.accepted[2]
        assert tr.contraction_holds()
    assert seen_first and seen_skip


def test_norm_cap_excludes_long_columns():
    cols = np.array([[100, 1, -1, 0]])
    tr = subsample(cols, [0], 1.0, 1.0, coin_seed=0)
    assert tr.norm_cap == pytest.approx(10.0)
    assert not tr.norm_ok[0] and not tr.accepted[0]


def test_batch_matches_single_traces():
    rng = np.random.default_rng(0)
    cols = rng.integers(-3, 4, size=(5, 2, 300))
    batch = subsample(cols, [0, 0], 0.8, 0.5, [10, 11, 12, 13, 14], scale=3)
    for i, tr in enumerate(batch):
        single = subsample(cols[i], [0, 0], 0.8, 0.5, 10 + i, scale=3)
        assert np.array_equal(single.selected, tr.selected)
        assert np.array_equal(single.running_sum, tr.running_sum)


def test_non_integral_mean_stays_exact():
    rng = np.random.default_rng(1)
    cols = rng.integers(1, 4, size=(2, 500))
    tr = subsample(cols, [2 / 3, 2 / 3], 0.3, 0.5, 5, scale=3)
    assert tr.exact
    assert tr.contraction_holds()


@given(seed=st.integers(0, 10**6), m=st.integers(1, 3))
def test_contraction_on_real_columns(seed, m):
    rng = np.random.default_rng(seed)
    cols = rng.uniform(-1.7, 1.7, size=(m, 400))
    tr = subsample(cols, np.zeros(m), 1.0, 0.5, seed)
    assert not tr.exact
    assert tr.contraction_holds()
    assert np.all(tr.inner_sign[tr.accepted] <= 0)


def test_selected_set_is_large():
    rng = np.random.Generator(np.random.Philox(key=[9, 9]))
    cols = rng.integers(-3, 4, size=(100, 2, 5000))
    trs = subsample(cols, [0, 0], np.sqrt(4 / 9), 0.5, list(range(100)), scale=3)
    assert sum(len(t.selected) >= 5000 / 8 for t in trs) >= 99


def test_subsample_rejects_bad_parameters():
    with pytest.raises(ValueError):
        subsample(np.zeros((1, 3)), [0], 0.0, 0.5, 0)
    with pytest.raises(ValueError):
        subsample(np.zeros((1, 3)), [0], 1.0, 1.5, 0)


# ---------------------------------------------------------------- exact hitting

def test_empty_target():
    res = hit_target_exact(np.array([[1, 2, 3]]), 1, [0], (0, 3))
    assert res.ok and len(res.subset) == 0


def test_small_exact_hit():
    res = hit_target_exact(np.array([[2, 3, 5]]), 1, [8], (1, 3))
    assert res.subset.tolist() == [1, 2]
    assert res.achieved.tolist() == [8]


def test_planted_subset_is_found():
    rng = np.random.default_rng(3)
    A = rng.integers(-3, 4, size=(2, 120))
    plant = rng.choice(120, 9, replace=False)
    t = A[:, plant].sum(axis=1)
    res = hit_target_exact(A, 3, t, (5, 12))
    assert res.ok
    assert 5 <= len(res.subset) <= 12
    assert np.array_equal(A[:, res.subset].sum(axis=1), t)


def test_box_overflow_reports_requirement():
    A = np.ones((2, 50), dtype=np.int64)
    with pytest.raises(BoxOverflow) as exc:
        hit_target_exact(A, 1, [3, 3], (1, 10), budget_bytes=100)
    assert exc.value.required > exc.value.available


def test_unreachable_target_and_empty_band():
    assert isinstance(hit_target_exact(np.array([[1, 1]]), 1, [5]), NotFound)
    assert isinstance(hit_target_exact(np.array([[1, 1, 1]]), 1, [1], (3, 2)), NotFound)


@given(A=int_matrix, data=st.data())
def test_exact_hit_agrees_with_enumeration(A, data):
    A = np.array(A, dtype=np.int64)
    m, nb = A.shape
    t = np.array(data.draw(st.lists(st.integers(-4, 4), min_size=m, max_size=m)))
    lo = data.draw(st.integers(0, nb))
    hi = data.draw(st.integers(lo, nb))
    truth = brute_force_subsets(A, t, (lo, hi))
    res = hit_target_exact(A, 1, t, (lo, hi))
    assert res.ok == bool(truth)
    if truth:
        assert frozenset(res.subset.tolist()) in truth
        assert len(res.subset) == min(len(s) for s in truth)
    if lo == 0:
        mc = hit_target_exact(A, 1, t, (lo, hi), cardinality=False)
        assert mc.ok == bool(truth)
        if truth:
            assert len(mc.subset) == min(len(s) for s in truth)


# ---------------------------------------------------------------- approximate hitting

def test_planted_real_subset_reaches_tolerance():
    rng = np.random.default_rng(4)
    A = rng.uniform(-1.7, 1.7, size=(2, 60))
    plant = rng.choice(60, 6, replace=False)
    t = A[:, plant].sum(axis=1)
    res = hit_target_approx(A, t, (3, 9), tol=1e-3, seed=1)
    assert res.status is HitStatus.WITHIN_TOL
    assert res.residual_norm <= 1e-3


def test_empty_band_returns_best_immediately():
    res = hit_target_approx(np.ones((1, 3)), [1.0], (5, 5))
    assert res.status is HitStatus.BEST
    assert len(res.subset) == 0 and res.restarts == 0


@given(seed=st.integers(0, 10**6))
def test_small_inputs_are_solved_exhaustively(seed):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(2, 10))
    t = rng.normal(size=2)
    res = hit_target_approx(A, t, (2, 6), tol=1e-12)
    bits = (np.arange(1024)[:, None] >> np.arange(10)) & 1
    card = bits.sum(axis=1)
    ok = (card >= 2) & (card <= 6)
    best = np.linalg.norm(bits[ok] @ A.T - t, axis=1).min()
    assert res.residual_norm == pytest.approx(best, abs=1e-12)


def test_cube_columns_hit_scaled_sum():
    n_bar, p, hits = 400, 0.05, 0
    band = cardinality_band(p, n_bar)
    for seed in range(100):
        rng = np.random.Generator(np.random.Philox(key=[seed, 400]))
        A = rng.uniform(-np.sqrt(3), np.sqrt(3), size=(2, n_bar))
        t = p * A.sum(axis=1)
        res = hit_target_approx(A, t, band, tol=1e-3, budget=200, seed=seed)
        hits += res.residual_norm <= 1e-3
        if res.ok:
            assert band[0] <= len(res.subset) <= band[1]
    assert hits >= 90


# ---------------------------------------------------------------- distributions

def test_single_bernoulli():
    P = pmf_convolution(np.array([[3]]), 1, 0.3)
    assert P.prob([0]) == pytest.approx(0.7)
    assert P.prob([3]) == pytest.approx(0.3)
    assert P.prob([1]) == 0.0


def test_binomial_two_columns():
    P = pmf_convolution(np.array([[1, 1]]), 1, 0.5)
    assert [P.prob([v]) for v in range(3)] == [0.25, 0.5, 0.25]


@given(A=int_matrix, p=st.sampled_from([0.1, 0.3, 0.5, 0.9]))
def test_convolution_matches_enumeration(A, p):
    A = np.array(A, dtype=np.int64)
    P = pmf_convolution(A, 1, p)
    ref = brute_force_pmf(A, p)
    assert abs(P.total_mass - 1.0) <= 1e-12
    assert np.all(P.probabilities >= 0)
    for pt in P.points():
        assert P.prob(pt) == pytest.approx(ref.get(tuple(pt), 0.0), abs=1e-12)


@given(A=int_matrix, p=st.sampled_from([0.1, 0.3, 0.5]))
def test_fourier_matches_convolution(A, p):
    A = np.array(A, dtype=np.int64)
    P = pmf_convolution(A, 1, p)
    four = pmf_fourier(A, 1, p, P.points())
    assert np.max(np.abs(four - P.probabilities.ravel())) <= 1e-9


def test_fourier_edge_cases():
    A = np.array([[1, 2, -1], [0, 1, 1]])
    assert abs(pmf_fourier(A, 1, 0.4, [10, 10])) <= 1e-9
    assert pmf_fourier(A, 1, 0.0, [0, 0]) == pytest.approx(1.0)
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        pmf_fourier(A, 1, 0.4, [0, 0], grid=3)
    assert any(issubclass(x.category, GridTooCoarse) for x in w)


def test_charfn_basic_values():
    rng = np.random.default_rng(6)
    A = rng.integers(-3, 4, size=(2, 25))
    assert charfn(A, 0.3, [0.0, 0.0]) == pytest.approx(1.0 + 0.0j)
    assert charfn(A, 0.3, [2.0, -1.0]) == pytest.approx(1.0 + 0.0j)
    vals = charfn(A, 0.3, rng.uniform(-0.5, 0.5, size=(1000, 2)))
    assert np.all(np.abs(vals) <= 1.0 + 1e-12)


def test_decay_profile_shells():
    rng = np.random.Generator(np.random.Philox(key=[2, 200]))
    A = rng.integers(-2, 3, size=(2, 200))
    prof = decay_profile(A, 0.05, [0.0, 0.0, 0.25, 0.5])
    assert prof.rows[0].max_abs == pytest.approx(1.0)
    assert all(r.max_abs <= 1.0 + 1e-12 for r in prof.rows)
    far = prof.rows[-1].max_abs
    assert fitted_decay_constant(far, 0.05, 200) > 0
