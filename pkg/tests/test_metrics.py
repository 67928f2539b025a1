import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import kendalltau
from sklearn.metrics import roc_auc_score

from _oracles import brute_kendall
from urlr.exceptions import ValidationError
from urlr.metrics import evaluate, kendall_correlation, kendall_distance, outlier_roc
from urlr.regpath import OutlierPath

scores = st.lists(st.floats(-100, 100, allow_nan=False), min_size=2, max_size=25)


def test_kendall_examples():
    assert kendall_distance([1, 2, 3], [1, 2, 3]) == 0.0
    assert kendall_distance([4, 3, 2, 1], [1, 2, 3, 4]) == 1.0
    assert kendall_distance([1, 3, 2], [1, 2, 3]) == pytest.approx(1 / 3)


def test_kendall_ties():
    # predicted tie counts half; truth tie is skipped
    assert kendall_distance([1, 1], [1, 2]) == 0.5
    assert kendall_distance([1, 2, 3], [1, 1, 3]) == 0.0
    with pytest.raises(ValidationError):
        kendall_distance([1, 2], [5, 5])


def test_kendall_rejects_bad_input():
    with pytest.raises(ValidationError):
        kendall_distance([1.0], [1.0])
    with pytest.raises(ValidationError):
        kendall_distance([1, 2, 3], [1, 2])
    with pytest.raises(ValidationError):
        kendall_distance([1, 2], [1, 2], pairs=[[0, 2]])


def test_kendall_on_pair_subset():
    pred, truth = [1, 3, 2, 4], [1, 2, 3, 4]
    assert kendall_distance(pred, truth, pairs=[[1, 2]]) == 1.0
    assert kendall_distance(pred, truth, pairs=[[0, 1], [2, 3]]) == 0.0


def test_roc_perfect_order():
    assert outlier_roc(np.array([2, 0, 1, 3]), np.array([0, 0, 1, 0]))[0] == 1.0
    assert outlier_roc(np.array([1, 3, 0, 2]), np.array([0, 1, 0, 1]))[0] == 1.0


def test_roc_hand_example():
    auc, points = outlier_roc(np.arange(4), np.array([1, 0, 1, 0]))
    assert [(t, f) for _, t, f in points[1:]] == [(0.5, 0.0), (0.5, 0.5), (1.0, 0.5), (1.0, 1.0)]
    assert auc == 0.75


def test_roc_tail_is_one_tied_block():
    truth = np.array([1, 0, 1, 0, 0])
    act = np.array([2.0, 0.0, 0.0, 0.0, 0.0])
    path = OutlierPath(act, np.array([0, 1, 2, 3, 4]), np.ones(1))
    auc, points = outlier_roc(path, truth)
    assert [r for r, _, _ in points] == [0, 1, 5]
    # midrank: the remaining outlier beats each of 3 inliers with probability 1/2
    assert auc == pytest.approx(roc_auc_score(truth, [1, 0, 0, 0, 0]))
    assert auc == pytest.approx(0.75)


def test_roc_rejects_degenerate():
    with pytest.raises(ValidationError):
        outlier_roc(np.arange(3), np.zeros(3))
    with pytest.raises(ValidationError):
        outlier_roc(np.array([0, 0, 1]), np.array([1, 0, 0]))


def test_random_order_auc_near_half():
    aucs = []
    for seed in range(20):
        rng = np.random.default_rng(seed)
        truth = (rng.random(1000) < 0.25).astype(int)
        aucs.append(outlier_roc(rng.permutation(1000), truth)[0])
    assert abs(np.mean(aucs) - 0.5) <= 0.05


def test_evaluate_report():
    truth = np.array([1, 0, 1, 0])
    rep = evaluate([1, 2, 3], [1, 2, 3], path=np.arange(4), truth_outliers=truth)
    assert rep.kendall_distance == 0 and rep.kendall_correlation == 1 and rep.n_pairs_evaluated == 3
    assert rep.auc == 0.75 and len(rep.tpr_fpr) == 5
    assert evaluate([1, 2], [2, 1]).auc is None
    with pytest.raises(ValidationError):
        evaluate([1, 2], [1, 2], truth_outliers=truth)


@given(scores, st.randoms(use_true_random=False))
def test_kendall_matches_brute_force(pred, rnd):
    truth = [rnd.randint(0, 5) for _ in pred]
    if len(set(truth)) < 2:
        return
    assert kendall_distance(pred, truth) == pytest.approx(brute_kendall(pred, truth), abs=1e-12)


@given(st.lists(st.integers(-10**6, 10**6), min_size=3, max_size=30, unique=True),
       st.randoms(use_true_random=False))
def test_kendall_matches_scipy_tau(truth, rnd):
    pred = list(truth)
    rnd.shuffle(pred)
    tau = kendalltau(pred, truth).statistic
    assert kendall_correlation(pred, truth) == pytest.approx(tau, abs=1e-12)


@given(st.lists(st.integers(-10**6, 10**6), min_size=2, max_size=30, unique=True),
       st.randoms(use_true_random=False))
def test_kendall_antisymmetry(truth, rnd):
    pred = np.array(truth, float)
    rnd.shuffle(pred)
    assert kendall_distance(pred, truth) + kendall_distance(-pred, truth) == pytest.approx(1.0)


@given(st.lists(st.integers(-1000, 1000), min_size=2, max_size=25), st.integers(0, 10_000))
def test_kendall_monotone_invariance(pred, seed):
    # integer scores keep the cubic map exact, hence strictly monotone
    truth = np.random.default_rng(seed).permutation(len(pred))
    pred = np.array(pred, dtype=float)
    assert kendall_distance(2 * pred**3 + 7, truth) == kendall_distance(pred, truth)


@given(st.integers(0, 10_000), st.integers(4, 60))
def test_auc_matches_sklearn(seed, m):
    rng = np.random.default_rng(seed)
    truth = rng.integers(0, 2, m)
    truth[:2] = [0, 1]
    order = rng.permutation(m)
    ranks = np.empty(m)
    ranks[order] = np.arange(m)
    assert outlier_roc(order, truth)[0] == pytest.approx(roc_auc_score(truth, -ranks))


@given(st.integers(0, 10_000), st.integers(4, 60))
def test_auc_relabel_invariant(seed, m):
    rng = np.random.default_rng(seed)
    truth = rng.integers(0, 2, m)
    truth[:2] = [0, 1]
    act = np.where(rng.random(m) < 0.5, rng.random(m) + 0.1, 0.0)
    order = np.lexsort((np.arange(m), -act))
    perm = rng.permutation(m)
    # edge e becomes perm[e]
    act2 = np.empty(m)
    act2[perm] = act
    truth2 = np.empty(m, int)
    truth2[perm] = truth
    a = outlier_roc(OutlierPath(act, order, np.ones(1)), truth)[0]
    b = outlier_roc(OutlierPath(act2, perm[order], np.ones(1)), truth2)[0]
    assert a == pytest.approx(b, abs=1e-12)
