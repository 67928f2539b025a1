"""scikit-learn style wrapper around the fitting pipeline."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .exceptions import ValidationError
from .graph import ComparisonGraph, build_graph
from .pipeline import PipelineConfig, fit
from .regpath import PathSpec


def check_pairs(pairs, n_nodes: int) -> np.ndarray:
    """Validate an ``(m, 2)`` array of ``(preferred, other)`` node ids."""
    pairs = check_array(pairs, dtype=np.int64, ensure_2d=True, ensure_min_samples=1)
    if pairs.shape[1] < 2:
        raise ValidationError(f"pairs need two columns (preferred, other), got {pairs.shape[1]}")
    pairs = pairs[:, :2]
    if pairs.min() < 0 or pairs.max() >= n_nodes:
        bad = int(pairs[(pairs < 0) | (pairs >= n_nodes)][0])
        raise ValidationError(f"node {bad} has no feature row (features cover 0..{n_nodes - 1})")
    return pairs


class RobustRanker(BaseEstimator):
    """Linear ranking function learned from pairwise preferences with outlier pruning.

    ``fit(X, y)`` takes the ``N x d`` feature matrix and the comparisons as
    either an ``(m, 2)`` array of ``(preferred, other)`` rows, one per vote,
    or a ready :class:`ComparisonGraph`. ``predict`` returns ``X @ coef_``.

    Parameters
    ----------
    method : {"urlr", "raw", "majority_vote", "huber_lasso_fl"}
    prune_percent : float
        Share of edges, in percent, removed from the top of the outlier order.
    mu : float
        Ridge term of the coefficient solve.
    pca_dim : int or None
        Reduce features to this many principal directions for outlier
        detection only; the coefficients still use all features.
    """

    def __init__(self, method="urlr", prune_percent=20.0, mu=1e-3, pca_dim=None,
                 n_lambdas=100, lambda_min_ratio=1e-3, cd_tolerance=1e-7, max_sweeps=10_000):
        self.method = method
        self.prune_percent = prune_percent
        self.mu = mu
        self.pca_dim = pca_dim
        self.n_lambdas = n_lambdas
        self.lambda_min_ratio = lambda_min_ratio
        self.cd_tolerance = cd_tolerance
        self.max_sweeps = max_sweeps

    def _config(self) -> PipelineConfig:
        path = PathSpec(int(self.n_lambdas), float(self.lambda_min_ratio),
                        float(self.cd_tolerance), int(self.max_sweeps))
        return PipelineConfig(self.method, float(self.prune_percent), float(self.mu),
                              self.pca_dim, path)

    def fit(self, X, y):
        X = check_array(X, dtype=np.float64)
        if isinstance(y, ComparisonGraph):
            if y.n_nodes != X.shape[0]:
                raise ValidationError(f"graph has {y.n_nodes} nodes, features have {X.shape[0]} rows")
            graph = y
        else:
            graph = build_graph(check_pairs(y, X.shape[0]).tolist(), X.shape[0])
        result = fit(graph, X, self._config())
        self.graph_ = graph
        self.result_ = result
        self.coef_ = result.model.beta
        self.outlier_path_ = result.outlier_order
        self.inlier_mask_ = result.pruned.astype(bool)
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValidationError(f"X has {X.shape[1]} features, model expects {self.n_features_in_}")
        return X @ self.coef_

    def score(self, X, y):
        """Kendall correlation of the predicted scores with the given preferences.

        Each ``(preferred, other)`` row is one pair; a predicted tie counts as
        half a disagreement.
        """
        s = self.predict(X)
        pairs = check_pairs(y, X.shape[0])
        diff = s[pairs[:, 0]] - s[pairs[:, 1]]
        dist = np.mean(np.where(diff > 0, 0.0, np.where(diff == 0, 0.5, 1.0)))
        return float(1.0 - 2.0 * dist)
