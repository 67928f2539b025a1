"""Weighted design system, ridge solves for beta, and the residual projector.

The design for a graph ``G`` and feature matrix ``Phi`` is
``X = sqrt(W) C Phi`` with one row per edge. Outlier detection works in
the orthogonal complement of ``col(X)``; :class:`HatProjection` carries
that complement in low-rank form so nothing ``|E| x |E|`` has to exist
unless asked for.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator

from .exceptions import NumericalError, ValidationError
from .graph import ComparisonGraph, incidence_matrix

DEFAULT_MU = 1e-3
DEFAULT_DENSE_CAP = 20_000


@dataclass(frozen=True)
class RankModel:
    beta: np.ndarray
    mu: float = DEFAULT_MU

    def __post_init__(self):
        beta = np.asarray(self.beta, dtype=float).reshape(-1)
        if not np.all(np.isfinite(beta)):
            raise NumericalError("model coefficients are not finite")
        if not self.mu > 0:
            raise ValidationError("mu must be positive")
        object.__setattr__(self, "beta", beta)

    @property
    def dim(self) -> int:
        return int(self.beta.size)


def check_features(phi, n_nodes: int | None = None) -> np.ndarray:
    """Return ``phi`` as a finite 2-D float array, optionally checking its row count."""
    phi = np.asarray(phi, dtype=float)
    if phi.ndim == 1:
        phi = phi[:, None]
    if phi.ndim != 2:
        raise ValidationError(f"feature matrix must be 2-D, got shape {phi.shape}")
    if not np.all(np.isfinite(phi)):
        raise ValidationError("feature matrix contains non-finite values")
    if n_nodes is not None and phi.shape[0] != n_nodes:
        raise ValidationError(
            f"feature matrix has {phi.shape[0]} rows but the graph has {n_nodes} nodes"
        )
    return phi


@dataclass(frozen=True)
class DesignSystem:
    """``X = sqrt(W) C Phi`` together with ``sqrt(w)`` and the all-ones flags ``y``."""

    X: np.ndarray
    sqrt_w: np.ndarray
    mu: float = DEFAULT_MU
    dense_cap: int = DEFAULT_DENSE_CAP

    @property
    def n_edges(self) -> int:
        return int(self.X.shape[0])

    @property
    def dim(self) -> int:
        return int(self.X.shape[1])

    @property
    def y(self) -> np.ndarray:
        return np.ones(self.n_edges)

    @property
    def weights(self) -> np.ndarray:
        return self.sqrt_w**2

    @cached_property
    def hat(self) -> "HatProjection":
        return hat_projection(self)


def design_matrix(g: ComparisonGraph, phi, mu: float = DEFAULT_MU,
                  dense_cap: int = DEFAULT_DENSE_CAP) -> DesignSystem:
    phi = check_features(phi, g.n_nodes)
    sqrt_w = np.sqrt(g.weight.astype(float))
    diff = phi[g.src] - phi[g.dst] if g.n_edges else np.zeros((0, phi.shape[1]))
    return DesignSystem(X=sqrt_w[:, None] * diff, sqrt_w=sqrt_w, mu=float(mu), dense_cap=dense_cap)


def featureless_design(g: ComparisonGraph, mu: float = DEFAULT_MU,
                       dense_cap: int = DEFAULT_DENSE_CAP) -> DesignSystem:
    """Design with ``Phi = I``, i.e. ``X = sqrt(W) C``: one free score per node."""
    sqrt_w = np.sqrt(g.weight.astype(float))
    C = incidence_matrix(g)
    X = C.multiply(sqrt_w[:, None]).toarray()
    return DesignSystem(X=X, sqrt_w=sqrt_w, mu=float(mu), dense_cap=dense_cap)


def _ridge(sys: DesignSystem, target: np.ndarray, mask: np.ndarray) -> np.ndarray:
    # Both fit_beta and fit_beta_pruned go through here so that an all-ones
    # mask reproduces fit_beta bit for bit.
    X = sys.X
    Xm = X * mask[:, None]
    gram = X.T @ Xm
    gram[np.diag_indices_from(gram)] += sys.mu
    rhs = Xm.T @ (sys.sqrt_w * target)
    try:
        factor = scipy.linalg.cho_factor(gram, lower=False, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"normal equations are not positive definite: {exc}") from exc
    return scipy.linalg.cho_solve(factor, rhs, check_finite=False)


def fit_beta(sys: DesignSystem, gamma=None) -> RankModel:
    """``beta = (X'X + mu I)^-1 X' sqrt(W) (y - gamma)``."""
    gamma = np.zeros(sys.n_edges) if gamma is None else np.asarray(gamma, dtype=float)
    if gamma.shape != (sys.n_edges,):
        raise ValidationError(f"gamma has length {gamma.size}, expected {sys.n_edges}")
    if not np.all(np.isfinite(gamma)):
        raise ValidationError("gamma contains non-finite values")
    beta = _ridge(sys, sys.y - gamma, np.ones(sys.n_edges))
    return RankModel(beta=beta, mu=sys.mu)


def fit_beta_pruned(sys: DesignSystem, f) -> RankModel:
    """Refit on the inlier edges only: ``(X'FX + mu I)^-1 X' sqrt(W) F y``."""
    f = np.asarray(f)
    if f.shape != (sys.n_edges,):
        raise ValidationError(f"inlier mask has length {f.size}, expected {sys.n_edges}")
    if not np.all((f == 0) | (f == 1)):
        raise ValidationError("inlier mask must be binary")
    if not np.any(f):
        raise ValidationError("no inliers remain after pruning")
    beta = _ridge(sys, sys.y, f.astype(float))
    return RankModel(beta=beta, mu=sys.mu)


class HatProjection:
    """Orthogonal projector ``H`` onto ``col(X)`` and the complement it induces.

    ``H = Q Q'`` with ``Q`` an orthonormal basis from a thin SVD of ``X``.
    ``X~ = (I - H) sqrt(W)`` and ``y~ = X~ y``.
    """

    def __init__(self, X: np.ndarray, sqrt_w: np.ndarray, dense_cap: int = DEFAULT_DENSE_CAP):
        self.sqrt_w = np.asarray(sqrt_w, dtype=float)
        self.dense_cap = int(dense_cap)
        self._X = X
        m = X.shape[0]
        if X.size == 0 or not np.any(X):
            self.basis = np.zeros((m, 0))
        else:
            U, s, _ = np.linalg.svd(X, full_matrices=False)
            tol = s[0] * max(X.shape) * np.finfo(float).eps
            self.basis = U[:, s > tol]

    @property
    def rank(self) -> int:
        """Rank of ``X``; the residual space has dimension ``|E| - rank``."""
        return int(self.basis.shape[1])

    @property
    def n_edges(self) -> int:
        return int(self.sqrt_w.size)

    def project_out(self, v: np.ndarray) -> np.ndarray:
        """``(I - H) v`` for a vector or a stack of columns."""
        Q = self.basis
        return v - Q @ (Q.T @ v)

    def hat_matrix(self) -> np.ndarray:
        self._check_cap()
        return self.basis @ self.basis.T

    @cached_property
    def ytilde(self) -> np.ndarray:
        return self.project_out(self.sqrt_w.copy())

    @property
    def xtilde(self):
        """Dense ``X~`` when ``|E|`` is within the cap, else a ``LinearOperator``."""
        if self.n_edges <= self.dense_cap:
            return self.project_out(np.diag(self.sqrt_w))
        m = self.n_edges
        return LinearOperator(
            (m, m),
            matvec=lambda v: self.project_out(self.sqrt_w * np.ravel(v)),
            rmatvec=lambda v: self.sqrt_w * self.project_out(np.ravel(v)),
            dtype=float,
        )

    def gram_factors(self):
        """``X~'X~ = diag(d) + s * U U'`` returned as ``(d, U, s)``.

        Here ``d = w``, ``U = sqrt(W) Q`` and ``s = -1``; the right-hand side
        of the normal equations is ``X~' y~ = X~'X~ 1``.
        """
        U = self.sqrt_w[:, None] * self.basis
        return self.sqrt_w**2, U, -1.0

    def warm_start_basis(self):
        """A matrix spanning ``col(X)``: ``X`` itself in sparse form when it is
        mostly zeros (one score per node), otherwise the orthonormal ``Q``."""
        X = self._X
        if self.rank and X.shape[1] > 20 and np.count_nonzero(X) <= 0.05 * X.size:
            return sp.csr_matrix(X)
        return self.basis

    def _check_cap(self):
        if self.n_edges > self.dense_cap:
            raise ValidationError(
                f"|E|={self.n_edges} exceeds the dense cap {self.dense_cap}; use the operator form"
            )


def hat_projection(sys: DesignSystem) -> HatProjection:
    return HatProjection(sys.X, sys.sqrt_w, sys.dense_cap)


def pca_reduce(phi, target_dim: int) -> np.ndarray:
    """Project centred features onto their top principal directions.

    Each direction is signed so its largest-magnitude loading is positive.
    """
    phi = check_features(phi)
    n, d = phi.shape
    if not 1 <= target_dim <= min(n - 1, d):
        raise ValidationError(f"target_dim must lie in [1, {min(n - 1, d)}], got {target_dim}")
    centred = phi - phi.mean(axis=0)
    _, _, Vt = np.linalg.svd(centred, full_matrices=False)
    comps = Vt[:target_dim]
    pivot = np.argmax(np.abs(comps), axis=1)
    comps = comps * np.sign(comps[np.arange(target_dim), pivot])[:, None]
    return centred @ comps.T


def predict(model: RankModel, phi) -> np.ndarray:
    phi = check_features(phi)
    if phi.shape[1] != model.dim:
        raise ValidationError(f"features have {phi.shape[1]} columns, model expects {model.dim}")
    return phi @ model.beta
