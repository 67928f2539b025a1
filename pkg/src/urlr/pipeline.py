"""End-to-end fits: URLR and the Raw, majority-vote and featureless baselines."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import ValidationError
from .graph import ComparisonGraph, component_labels, connected_components, majority_vote_filter
from .regpath import OutlierPath, PathSpec, lasso_path, prune
from .solver import (
    DEFAULT_DENSE_CAP,
    DEFAULT_MU,
    RankModel,
    check_features,
    design_matrix,
    featureless_design,
    fit_beta,
    fit_beta_pruned,
    pca_reduce,
)

METHODS = ("urlr", "raw", "majority_vote", "huber_lasso_fl")


@dataclass(frozen=True)
class PipelineConfig:
    method: str = "urlr"
    prune_percent: float = 20.0
    mu: float = DEFAULT_MU
    pca_dim: int | None = None
    path: PathSpec = field(default_factory=PathSpec)
    dense_cap: int = DEFAULT_DENSE_CAP

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValidationError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if not 0.0 <= float(self.prune_percent) < 100.0:
            raise ValidationError(f"prune_percent must lie in [0, 100), got {self.prune_percent}")
        if not self.mu > 0:
            raise ValidationError("mu must be positive")
        if self.pca_dim is not None and int(self.pca_dim) < 1:
            raise ValidationError("pca_dim must be a positive integer")

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "prune_percent": float(self.prune_percent),
            "mu": float(self.mu),
            "pca_dim": self.pca_dim,
            "n_lambdas": self.path.n_lambdas,
            "lambda_min_ratio": self.path.lambda_min_ratio,
            "cd_tolerance": self.path.cd_tolerance,
            "max_sweeps": self.path.max_sweeps,
        }


@dataclass(frozen=True)
class GlobalScores:
    """Per-node scores, centred to mean zero inside each connected component."""

    theta: np.ndarray

    @classmethod
    def canonical(cls, theta, labels) -> "GlobalScores":
        theta = np.asarray(theta, dtype=float).copy()
        labels = np.asarray(labels)
        for lab in np.unique(labels):
            sel = labels == lab
            theta[sel] -= theta[sel].mean()
        return cls(theta)


@dataclass(frozen=True)
class FitResult:
    method: str
    model: RankModel | None
    outlier_order: OutlierPath | None
    pruned: np.ndarray
    diagnostics: dict
    scores: GlobalScores | None = None

    @property
    def pruned_edges(self) -> np.ndarray:
        """Indices of the edges treated as outliers (``f == 0``)."""
        return np.flatnonzero(self.pruned == 0)


def diagnostics(g: ComparisonGraph, X=None) -> dict:
    """Dimension of the residual space available to each detector.

    Featureless: ``|E| - rank(C) = |E| - |V| + c``. With features:
    ``|E| - rank(X)``. Per-component figures use the edges inside each
    weakly connected component.
    """
    comps = connected_components(g)
    labels = component_labels(g)
    edge_comp = labels[g.src] if g.n_edges else np.zeros(0, dtype=np.int64)
    out = {
        "n_nodes": g.n_nodes,
        "n_edges": g.n_edges,
        "n_components": len(comps),
        "dim_gamma_featureless": g.n_edges - g.n_nodes + len(comps),
    }
    per = []
    for k, comp in enumerate(comps):
        sel = edge_comp == k
        entry = {"nodes": len(comp), "edges": int(sel.sum()),
                 "dim_gamma_featureless": int(sel.sum()) - len(comp) + 1}
        if X is not None:
            entry["dim_gamma_urlr"] = int(sel.sum()) - _rank(X[sel])
        per.append(entry)
    if X is not None:
        rank = _rank(X)
        out["rank_x"] = rank
        out["dim_gamma_urlr"] = g.n_edges - rank
    out["components"] = per
    return out


def _rank(X) -> int:
    if X.size == 0:
        return 0
    return int(np.linalg.matrix_rank(X))


def _detection_features(phi, cfg: PipelineConfig):
    if cfg.pca_dim is None:
        return phi
    if cfg.pca_dim > phi.shape[1]:
        raise ValidationError(f"pca_dim {cfg.pca_dim} exceeds the feature dimension {phi.shape[1]}")
    return pca_reduce(phi, cfg.pca_dim)


def _require_edges(g: ComparisonGraph):
    if g.n_edges == 0:
        raise ValidationError("the comparison graph has no edges")


def fit_urlr(g: ComparisonGraph, phi, cfg: PipelineConfig | None = None) -> FitResult:
    """Path over the feature-projected residual space, prune the top p%, refit beta."""
    cfg = cfg or PipelineConfig()
    phi = check_features(phi, g.n_nodes)
    _require_edges(g)
    sys = design_matrix(g, phi, cfg.mu, cfg.dense_cap)
    det = sys if cfg.pca_dim is None else design_matrix(
        g, _detection_features(phi, cfg), cfg.mu, cfg.dense_cap)
    path = lasso_path(det.hat, None, det.weights, cfg.path)
    f = prune(path, cfg.prune_percent)
    model = fit_beta_pruned(sys, f)
    return FitResult("urlr", model, path, f, diagnostics(g, det.X))


def fit_raw(g: ComparisonGraph, phi, cfg: PipelineConfig | None = None) -> FitResult:
    """All edges kept, ``gamma = 0``."""
    cfg = cfg or PipelineConfig()
    phi = check_features(phi, g.n_nodes)
    _require_edges(g)
    sys = design_matrix(g, phi, cfg.mu, cfg.dense_cap)
    return FitResult("raw", fit_beta(sys), None, np.ones(g.n_edges, dtype=np.int64),
                     diagnostics(g, sys.X))


def fit_majority(g: ComparisonGraph, phi, cfg: PipelineConfig | None = None) -> FitResult:
    """Drop minority and tied directions per pair, then fit on what is left."""
    cfg = cfg or PipelineConfig()
    phi = check_features(phi, g.n_nodes)
    _require_edges(g)
    kept = majority_vote_filter(g)
    if kept.n_edges == 0:
        raise ValidationError("majority voting removed every edge")
    keep = {(s, d) for s, d, _ in kept.edges()}
    f = np.array([(s, d) in keep for s, d, _ in g.edges()], dtype=np.int64)
    sys = design_matrix(kept, phi, cfg.mu, cfg.dense_cap)
    return FitResult("majority_vote", fit_beta(sys), None, f,
                     diagnostics(g, design_matrix(g, phi).X))


def fit_global_scores(g: ComparisonGraph, f=None, mu: float = DEFAULT_MU) -> GlobalScores:
    """Featureless node scores from the inlier edges, centred per component."""
    sys = featureless_design(g, mu)
    f = np.ones(g.n_edges, dtype=np.int64) if f is None else np.asarray(f)
    theta = fit_beta_pruned(sys, f).beta
    return GlobalScores.canonical(theta, component_labels(g))


def fit_huber_lasso_fl(g: ComparisonGraph, phi, cfg: PipelineConfig | None = None) -> FitResult:
    """Detect outliers from the graph alone, then refit beta with features."""
    cfg = cfg or PipelineConfig()
    phi = check_features(phi, g.n_nodes)
    _require_edges(g)
    fl = featureless_design(g, cfg.mu, cfg.dense_cap)
    path = lasso_path(fl.hat, None, fl.weights, cfg.path)
    f = prune(path, cfg.prune_percent)
    sys = design_matrix(g, phi, cfg.mu, cfg.dense_cap)
    model = fit_beta_pruned(sys, f)
    return FitResult("huber_lasso_fl", model, path, f, diagnostics(g, sys.X),
                     scores=fit_global_scores(g, f, cfg.mu))


_FITTERS = {
    "urlr": fit_urlr,
    "raw": fit_raw,
    "majority_vote": fit_majority,
    "huber_lasso_fl": fit_huber_lasso_fl,
}


def fit(g: ComparisonGraph, phi, cfg: PipelineConfig | None = None) -> FitResult:
    """Dispatch on ``cfg.method``."""
    cfg = cfg or PipelineConfig()
    return _FITTERS[cfg.method](g, phi, cfg)
