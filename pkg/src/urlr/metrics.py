"""Ranking and outlier-detection metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ValidationError
from .regpath import OutlierPath


@dataclass(frozen=True)
class EvalReport:
    kendall_distance: float
    kendall_correlation: float
    n_pairs_evaluated: int
    auc: float | None = None
    tpr_fpr: list | None = None


def _sign_pairs(scores, i, j):
    return np.sign(scores[i] - scores[j])


def kendall_distance(pred_scores, truth, pairs=None) -> float:
    """Fraction of item pairs ordered differently by ``pred_scores`` and ``truth``.

    ``truth`` holds ground-truth scores (larger = more). Pairs tied in truth
    are skipped; a tie in the prediction counts as half a mismatch. With
    ``pairs`` (an ``(m, 2)`` index array) only those pairs are scored,
    otherwise all ``n(n-1)/2`` pairs.
    """
    return _kendall(pred_scores, truth, pairs)[0]


def kendall_correlation(pred_scores, truth, pairs=None) -> float:
    return 1.0 - 2.0 * kendall_distance(pred_scores, truth, pairs)


def _kendall(pred_scores, truth, pairs):
    pred = np.asarray(pred_scores, dtype=float).reshape(-1)
    true = np.asarray(truth, dtype=float).reshape(-1)
    if pred.shape != true.shape:
        raise ValidationError(f"prediction has {pred.size} items, truth has {true.size}")
    if pred.size < 2:
        raise ValidationError("need at least two items")
    if pairs is None:
        i, j = np.triu_indices(pred.size, k=1)
    else:
        pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        if pairs.size and (pairs.min() < 0 or pairs.max() >= pred.size):
            raise ValidationError("pair index out of range")
        i, j = pairs[:, 0], pairs[:, 1]
    t = _sign_pairs(true, i, j)
    p = _sign_pairs(pred, i, j)
    keep = t != 0
    n = int(keep.sum())
    if n == 0:
        raise ValidationError("every pair is tied in the ground truth")
    bad = np.where(p[keep] == 0, 0.5, (p[keep] != t[keep]).astype(float))
    return float(bad.sum() / n), n


def outlier_roc(path_or_order, truth_outliers):
    """ROC of the outlier ranking against known corrupted edges.

    Cuts are made after each distinct position along the order; edges that
    never entered the path form one tied block at the end, which is the
    midrank treatment of that tail. Returns ``(auc, points)`` where each point
    is ``(rank, tpr, fpr)`` with ``rank`` the number of edges flagged.
    """
    truth = np.asarray(truth_outliers).astype(bool).reshape(-1)
    if isinstance(path_or_order, OutlierPath):
        order = path_or_order.order
        tail = path_or_order.activation_lambda[order] == 0
    else:
        order = np.asarray(path_or_order, dtype=np.int64)
        tail = np.zeros(order.size, dtype=bool)
    if order.size != truth.size or np.any(np.sort(order) != np.arange(truth.size)):
        raise ValidationError("order must be a permutation of the edge indices")
    n_pos = int(truth.sum())
    n_neg = truth.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValidationError("ROC needs at least one outlier and one inlier")

    hits = truth[order]
    # groups: every activated edge alone, the never-activated tail together
    head = int(np.argmax(tail)) if tail.any() else order.size
    cuts = list(range(1, head + 1))
    if head < order.size:
        cuts.append(order.size)
    tp = np.concatenate([[0], np.cumsum(hits)[np.array(cuts) - 1]])
    fp = np.concatenate([[0], np.array(cuts) - tp[1:]])
    tpr = tp / n_pos
    fpr = fp / n_neg
    auc = float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2.0))
    points = [(int(r), float(a), float(b)) for r, a, b in zip([0] + cuts, tpr, fpr)]
    return auc, points


def evaluate(pred_scores, truth, pairs=None, path=None, truth_outliers=None) -> EvalReport:
    dist, n = _kendall(pred_scores, truth, pairs)
    auc = points = None
    if truth_outliers is not None:
        if path is None:
            raise ValidationError("truth_outliers given without an outlier path")
        auc, points = outlier_roc(path, truth_outliers)
    return EvalReport(dist, 1.0 - 2.0 * dist, n, auc, points)
