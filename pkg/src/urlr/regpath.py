"""Lasso regularization path over the per-edge outlier variables.

Edges are ranked by how early their outlier coefficient leaves zero as the
penalty decreases; the earliest are the strongest outlier candidates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from ._cd import cd_solve, gram_diagonal
from .exceptions import ConvergenceError, ValidationError
from .solver import HatProjection


@dataclass(frozen=True)
class PathSpec:
    n_lambdas: int = 100
    lambda_min_ratio: float = 1e-3
    cd_tolerance: float = 1e-7
    max_sweeps: int = 10_000

    def __post_init__(self):
        if self.n_lambdas < 1 or self.max_sweeps < 1:
            raise ValidationError("n_lambdas and max_sweeps must be positive")
        if not 0 < self.lambda_min_ratio < 1:
            raise ValidationError("lambda_min_ratio must lie in (0, 1)")
        if not self.cd_tolerance > 0:
            raise ValidationError("cd_tolerance must be positive")


@dataclass(frozen=True)
class OutlierPath:
    """Edge ranking produced by the path.

    ``activation_lambda[e]`` is the last grid value at which edge ``e`` was
    still zero before entering (the entry point lies in the grid interval
    just below it); 0 for edges that never enter. ``order`` lists edges from
    most to least suspicious.
    """

    activation_lambda: np.ndarray
    order: np.ndarray
    lambdas: np.ndarray
    gamma_at: np.ndarray | None = None

    @property
    def n_edges(self) -> int:
        return int(self.order.size)

    @property
    def n_activated(self) -> int:
        return int(np.count_nonzero(self.activation_lambda > 0))

    def ranks(self) -> np.ndarray:
        """Position of each edge in ``order`` (0 = most suspicious)."""
        r = np.empty(self.n_edges, dtype=np.int64)
        r[self.order] = np.arange(self.n_edges)
        return r


@dataclass(frozen=True)
class _Problem:
    """``X~'X~ = diag(d) + s U U'``, ``b = X~'y~`` and penalty weights ``w``.

    For projector inputs ``basis``/``z``/``sqrt_w`` describe the equivalent
    Huber regression over ``col(X)`` that supplies warm starts.
    """

    d: np.ndarray
    U: np.ndarray
    s: float
    b: np.ndarray
    w: np.ndarray
    basis: np.ndarray | None = None
    z: np.ndarray | None = None
    sqrt_w: np.ndarray | None = None
    scale: float = 1.0

    @property
    def n(self) -> int:
        return int(self.b.size)


def _problem(xtilde, ytilde, weights) -> _Problem:
    if isinstance(xtilde, HatProjection):
        d, U, s = xtilde.gram_factors()
        m = xtilde.n_edges
        # any z with (I-H) z = y~ works; the default y~ comes from z = sqrt(w)
        z = xtilde.sqrt_w.copy() if ytilde is None else np.asarray(ytilde, dtype=float)
        if z.shape != (m,):
            raise ValidationError(f"ytilde has shape {z.shape}, expected ({m},)")
        b = xtilde.sqrt_w * xtilde.project_out(z)
        A = xtilde.warm_start_basis()
        scale = float(np.sqrt(abs(A.multiply(A).sum(axis=0)).max())) if sp.issparse(A) else 1.0
        extra = dict(basis=A, z=z, sqrt_w=xtilde.sqrt_w, scale=scale)
    else:
        Xt = np.asarray(xtilde, dtype=float)
        if Xt.ndim != 2:
            raise ValidationError("Xtilde must be a 2-D array")
        m = Xt.shape[1]
        yt = np.asarray(ytilde, dtype=float)
        if yt.shape != (Xt.shape[0],):
            raise ValidationError(f"ytilde has shape {yt.shape}, expected ({Xt.shape[0]},)")
        d, U, s = np.zeros(m), Xt.T, 1.0
        b = Xt.T @ yt
        extra = {}
    w = np.ones(m) if weights is None else np.asarray(weights, dtype=float)
    if w.shape != (m,):
        raise ValidationError(f"weights have length {w.size}, expected {m}")
    if np.any(w < 1):
        raise ValidationError("edge weights must be >= 1")
    if not (np.all(np.isfinite(b)) and np.all(np.isfinite(U))):
        raise ValidationError("design or response contains non-finite values")
    return _Problem(d, U, float(s), b, w, **extra)


def lambda_grid(lam_max: float, spec: PathSpec) -> np.ndarray:
    if spec.n_lambdas == 1:
        return np.array([lam_max])
    k = np.arange(spec.n_lambdas) / (spec.n_lambdas - 1)
    grid = lam_max * spec.lambda_min_ratio**k
    grid[0] = lam_max
    return grid


def _line_search(r, a, w, lam):
    """Exact minimiser over ``alpha >= 0`` of ``sum w rho(r - alpha a)``.

    The derivative is monotone and piecewise linear, so bisect over its kinks
    and interpolate inside the bracketing segment.
    """

    def slope(alpha):
        return -np.sum(w * a * np.clip(r - alpha * a, -lam, lam))

    nz = a != 0
    kinks = np.concatenate([(r[nz] - lam) / a[nz], (r[nz] + lam) / a[nz]])
    kinks = np.unique(kinks[kinks > 0])
    lo_i, hi_i = -1, kinks.size
    while hi_i - lo_i > 1:
        mid = (lo_i + hi_i) // 2
        if slope(kinks[mid]) >= 0:
            hi_i = mid
        else:
            lo_i = mid
    lo = 0.0 if lo_i < 0 else kinks[lo_i]
    probe = lo + 1.0 if hi_i == kinks.size else 0.5 * (lo + kinks[hi_i])
    curv = np.sum((w * a * a)[np.abs(r - probe * a) < lam])
    if curv <= 0:
        return lo
    alpha = lo - slope(lo) / curv
    return alpha if hi_i == kinks.size else min(alpha, kinks[hi_i])


def _huber_fit(P: _Problem, lam, t, max_iter=20):
    """Damped Newton for ``min_t sum_e w_e rho_lam((z - A t)_e / sqrt(w_e))``.

    ``A`` spans ``col(X)``. Only a warm start: flat directions (nodes whose
    edges are all clipped) can make it crawl, so the iteration count is
    capped and coordinate descent finishes the job.
    """
    A, sw = P.basis, P.sqrt_w
    w = sw * sw
    sparse = sp.issparse(A)
    k = A.shape[1]
    eye = sp.identity(k, format="csc") if sparse else np.eye(k)
    for _ in range(max_iter):
        r = (P.z - A @ t) / sw
        g = -(A.T @ (sw * np.clip(r, -lam, lam)))
        if np.max(np.abs(g), initial=0.0) <= 1e-10 * lam * P.scale:
            break
        inl = np.abs(r) < lam
        Ai = A[inl]
        hess = Ai.T @ Ai
        if sparse:
            shift = 1e-10 * max(hess.diagonal().max(initial=0.0), 1.0)
            step = spsolve((hess + shift * eye).tocsc(), -g, permc_spec="MMD_AT_PLUS_A")
        else:
            step = scipy.linalg.solve(hess + 1e-10 * eye, -g, assume_a="pos", check_finite=False)
        alpha = _line_search(r, (A @ step) / sw, w, lam)
        if not alpha > 0:
            break
        t = t + alpha * step
        if alpha * np.max(np.abs(step)) <= 1e-15 * (1.0 + np.max(np.abs(t))):
            break
    return t


class _Solver:
    """Grid-point solver with penalty weights folded into the variables (``g' = w g``)."""

    def __init__(self, P: _Problem, spec: PathSpec):
        self.P, self.spec = P, spec
        w = P.w
        self.dd = np.ascontiguousarray(P.d / w**2)
        self.UU = np.ascontiguousarray(P.U / w[:, None])
        self.bb = np.ascontiguousarray(P.b / w)
        self.gdiag = gram_diagonal(self.dd, self.UU, P.s)
        self.scaled = np.zeros(P.n)
        self.t = None if P.basis is None else np.zeros(P.basis.shape[1])

    def solve(self, lam, index):
        P = self.P
        if self.t is not None:
            self.t = _huber_fit(P, lam, self.t)
            r = (P.z - P.basis @ self.t) / P.sqrt_w
            self.scaled = P.w * np.sign(r) * np.maximum(np.abs(r) - lam, 0.0)
        sweeps, change = cd_solve(self.dd, self.UU, P.s, self.bb, self.gdiag, float(lam),
                                  self.scaled, float(self.spec.cd_tolerance),
                                  int(self.spec.max_sweeps))
        if sweeps < 0:
            raise ConvergenceError(index, change, self.spec.max_sweeps)
        return self.scaled / P.w


def lasso_path(xtilde, ytilde=None, weights=None, spec: PathSpec | None = None,
               keep_coefficients: bool = False) -> OutlierPath:
    """Weighted lasso path ``0.5 |y~ - X~ g|^2 + lam sum_e w_e |g_e|``.

    ``xtilde`` is either a dense ``X~`` or a :class:`HatProjection`, in which
    case ``ytilde`` defaults to the projection's own ``y~``. Each grid point
    is warm-started from the previous one.
    """
    spec = spec or PathSpec()
    P = _problem(xtilde, ytilde, weights)
    m = P.n
    lam_max = float(np.max(np.abs(P.b) / P.w)) if m else 0.0
    if not lam_max > 0:
        zeros = np.zeros(m)
        return OutlierPath(zeros, np.arange(m), np.zeros(spec.n_lambdas),
                           np.zeros((spec.n_lambdas, m)) if keep_coefficients else None)
    lambdas = lambda_grid(lam_max, spec)
    solver = _Solver(P, spec)
    activation = np.zeros(m)
    mag = np.zeros(m)
    stored = np.zeros((lambdas.size, m)) if keep_coefficients else None
    for k, lam in enumerate(lambdas):
        gamma = solver.solve(lam, k)
        new = (gamma != 0) & (mag == 0)
        # an edge first nonzero at grid k entered somewhere in (lam_k, lam_{k-1}]
        activation[new] = lambdas[max(k - 1, 0)]
        mag[new] = np.abs(gamma[new])
        if stored is not None:
            stored[k] = gamma
    order = np.lexsort((np.arange(m), -mag, -activation))
    return OutlierPath(activation, order, lambdas, stored)


def lasso_solve(xtilde, ytilde, weights, lam: float, spec: PathSpec | None = None) -> np.ndarray:
    """Cold-start solution at a single penalty value."""
    spec = spec or PathSpec()
    P = _problem(xtilde, ytilde, weights)
    return _Solver(P, spec).solve(float(lam), 0)


def kkt_violation(xtilde, ytilde, weights, gamma, lam: float) -> float:
    """Largest violation of the lasso optimality conditions at ``gamma``."""
    P = _problem(xtilde, ytilde, weights)
    w = P.w
    gamma = np.asarray(gamma, dtype=float)
    grad = P.b - (P.d * gamma + P.s * (P.U @ (P.U.T @ gamma)))
    on = gamma != 0
    viol = np.zeros_like(gamma)
    viol[on] = np.abs(grad[on] - lam * w[on] * np.sign(gamma[on]))
    viol[~on] = np.maximum(np.abs(grad[~on]) - lam * w[~on], 0.0)
    return float(viol.max()) if viol.size else 0.0


def prune(path: OutlierPath, p_percent: float) -> np.ndarray:
    """Inlier indicator: 0 for the top ``floor(p/100 |E|)`` edges of the order, 1 elsewhere."""
    p = float(p_percent)
    if not 0.0 <= p <= 100.0:
        raise ValidationError(f"pruning rate must lie in [0, 100], got {p}")
    n_out = math.floor(p * path.n_edges / 100.0 + 1e-9)
    f = np.ones(path.n_edges, dtype=np.int64)
    f[path.order[:n_out]] = 0
    return f
