import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from otrelabel import (
    GroupedDataset,
    NumericalError,
    ValidationError,
    WeakLabelMatrix,
    accuracies_from_moments,
    estimate_accuracies,
    pairwise_moment,
    per_group_accuracies,
    resolve_sign,
    triplet_accuracies,
)
from helpers import sample_conditional_lfs

TRUE_ACC = np.array([0.8, 0.6, 0.4, 0.3, 0.2])


def test_moment_perfect_agreement():
    wl = WeakLabelMatrix(np.tile([[1, 1]], (5, 1)) * np.array([[1], [-1], [1], [1], [-1]]))
    assert pairwise_moment(wl, 0, 1) == 1.0


def test_moment_perfect_disagreement():
    v = np.array([[1, -1], [-1, 1], [1, -1]])
    assert pairwise_moment(WeakLabelMatrix(v), 0, 1) == -1.0


def test_moment_independent_lfs_near_zero():
    rng = np.random.default_rng(7)
    v = rng.choice([-1, 1], size=(1_000_000, 2))
    # independent fair votes: moment 0 with CLT tolerance 5/sqrt(n)
    assert abs(pairwise_moment(WeakLabelMatrix(v), 0, 1)) <= 0.005


def test_moment_skips_abstains():
    v = np.array([[1, 1], [0, 1], [1, 0], [-1, -1]])
    # only rows 0 and 3 count
    assert pairwise_moment(WeakLabelMatrix(v), 0, 1) == 1.0


def test_moment_undefined_when_no_overlap():
    v = np.array([[1, 0], [0, 1]])
    assert math.isnan(pairwise_moment(WeakLabelMatrix(v), 0, 1))


def test_moment_requires_distinct_indices():
    with pytest.raises(ValidationError):
        pairwise_moment(WeakLabelMatrix([[1, 1]]), 0, 0)


def test_population_moments_recover_accuracies_exactly():
    moments = np.outer(TRUE_ACC, TRUE_ACC)
    np.fill_diagonal(moments, 1.0)
    est, records = accuracies_from_moments(moments)
    assert np.abs(est - TRUE_ACC).max() <= 1e-12
    assert all(not r.degenerate for r in records)
    assert len(records) == 10  # C(5, 3)


def test_sampled_moments_recover_accuracies():
    wl, _ = sample_conditional_lfs(TRUE_ACC, 100_000, seed=3)
    est, _ = triplet_accuracies(wl)
    assert np.abs(est - TRUE_ACC).max() <= 0.02


def test_three_perfect_lfs():
    rng = np.random.default_rng(0)
    y = rng.choice([-1, 1], size=500)
    wl = WeakLabelMatrix(np.column_stack([y, y, y]))
    est, _ = triplet_accuracies(wl)
    assert np.allclose(est, 1.0)


def test_fewer_than_three_lfs_rejected():
    with pytest.raises(ValidationError):
        triplet_accuracies(WeakLabelMatrix([[1, -1], [1, 1]]))


def test_all_triplets_degenerate_raises():
    # lf 2 abstains everywhere: every triplet has an undefined moment
    v = np.array([[1, 1, 0], [-1, 1, 0], [1, -1, 0], [1, 1, 0]])
    with pytest.raises(NumericalError):
        triplet_accuracies(WeakLabelMatrix(v))


def test_magnitudes_clamped_to_one():
    # noisy moments can push the ratio above 1; output must stay in [0, 1]
    moments = np.array([
        [1.0, 0.9, 0.8],
        [0.9, 1.0, 0.5],
        [0.8, 0.5, 1.0],
    ])
    est, _ = accuracies_from_moments(moments)
    assert est.max() <= 1.0


def test_resolve_sign_all_aligned():
    rng = np.random.default_rng(1)
    y = rng.choice([-1, 1], size=100)
    wl = WeakLabelMatrix(np.column_stack([y, y, y, y]))
    signed = resolve_sign(np.full(4, 0.9), wl)
    assert np.all(signed > 0)


def test_resolve_sign_flags_adversarial_lf():
    rng = np.random.default_rng(2)
    y = rng.choice([-1, 1], size=400)
    wl = WeakLabelMatrix(np.column_stack([y, y, y, y, -y]))
    signed = resolve_sign(np.full(5, 0.8), wl)
    assert np.all(signed[:4] > 0) and signed[4] < 0


def test_resolve_sign_tie_rows_contribute_zero():
    # two opposing LFs: every row's majority is a tie, agreement 0 -> sign +
    wl = WeakLabelMatrix([[1, -1], [-1, 1], [1, -1]])
    signed = resolve_sign(np.array([0.5, 0.5]), wl)
    assert np.all(signed == 0.5)


def test_per_group_flipped_lf_detected_exactly():
    rng = np.random.default_rng(4)
    y = rng.choice([-1, 1], size=600)
    groups = np.repeat([0, 1], 300)
    lf1 = np.where(groups == 1, -y, y)  # flipped only on group 1
    wl = WeakLabelMatrix(np.column_stack([lf1, y, y, y]))
    ds = GroupedDataset(np.zeros((600, 1)), groups)
    acc = per_group_accuracies(wl, ds)
    assert acc[0, 0] == pytest.approx(1.0, abs=1e-12)
    assert acc[0, 1] == pytest.approx(-1.0, abs=1e-12)
    assert np.allclose(acc[1:, :], 1.0)


def test_per_group_identical_distributions_agree():
    wl, _ = sample_conditional_lfs(TRUE_ACC, 100_000, seed=5)
    groups = np.zeros(100_000, dtype=int)
    groups[50_000:] = 1
    ds = GroupedDataset(np.zeros((100_000, 1)), groups)
    acc = per_group_accuracies(wl, ds)
    assert np.abs(acc[:, 0] - acc[:, 1]).max() <= 0.03


def test_per_group_error_names_group():
    v = np.column_stack([
        np.array([1, -1, 1, 1]),
        np.array([1, 1, -1, 1]),
        np.array([0, 0, 1, -1]),  # lf 2 abstains on all of group 0
    ])
    ds = GroupedDataset(np.zeros((4, 1)), [0, 0, 1, 1])
    with pytest.raises(NumericalError, match="group 0"):
        per_group_accuracies(WeakLabelMatrix(v), ds)


def test_estimate_accuracies_bundles_both_parts():
    wl, _ = sample_conditional_lfs([0.9, 0.7, 0.5], 20_000, seed=6)
    ds = GroupedDataset(np.zeros((20_000, 1)),
                        np.tile([0, 1], 10_000))
    est, records = estimate_accuracies(wl, ds)
    assert est.per_lf_global.shape == (3,)
    assert est.per_lf_group.shape == (3, 2)
    assert records


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.permutations(list(range(4))))
def test_column_permutation_equivariance(seed, perm):
    wl, _ = sample_conditional_lfs([0.8, 0.6, 0.5, 0.3], 600, seed=seed)
    base, _ = triplet_accuracies(wl)
    permuted, _ = triplet_accuracies(WeakLabelMatrix(wl.votes[:, perm]))
    assert np.array_equal(permuted, base[perm])


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_row_shuffle_leaves_estimates_unchanged_exactly(seed):
    wl, _ = sample_conditional_lfs([0.8, 0.5, 0.4], 500, seed=seed)
    rng = np.random.default_rng(seed + 1)
    perm = rng.permutation(wl.n)
    base, _ = triplet_accuracies(wl)
    shuffled, _ = triplet_accuracies(WeakLabelMatrix(wl.votes[perm]))
    assert np.array_equal(base, shuffled)


def test_illegal_vote_values_refused():
    wl = WeakLabelMatrix([[1, 1, 2], [1, -1, 1], [-1, 1, -1]])
    with pytest.raises(ValidationError, match="illegal vote"):
        triplet_accuracies(wl)


def test_median_vs_mean_aggregation_tag():
    wl, _ = sample_conditional_lfs(TRUE_ACC, 5_000, seed=8)
    med, _ = triplet_accuracies(wl, aggregation="median")
    mean, _ = triplet_accuracies(wl, aggregation="mean")
    assert med.shape == mean.shape
    assert not np.array_equal(med, mean)
