"""Synthetic comparison data with known scores and planted label errors."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.stats import ortho_group

from .exceptions import ValidationError
from .graph import AnnotationRecord, ComparisonGraph, build_graph
from .pipeline import GlobalScores

GRAPHS = ("complete", "random_pairs")
THETA_SOURCES = ("uniform", "linear")
ERROR_MODELS = ("random_flip", "unintentional_quadratic", "mixed")

# a*d^2 + b*d + c with vertex at d = 2: flip chance 0.2 for identical items,
# zero for the largest gap of U(-1, 1) scores; mean 0.1 over random pairs
DEFAULT_QUADRATIC = (0.05, -0.2, 0.2)
# random labels on top of the quadratic: 0.375/2 + 0.625*0.1 = 0.25
DEFAULT_INTENTIONAL_RATE = 0.375


@dataclass(frozen=True)
class SyntheticSpec:
    """Generator settings.

    ``outlier_magnitude=None`` reverses corrupted labels outright. When a
    magnitude ``L`` is set, every vote is drawn as the sign of
    ``theta_i - theta_j + eps - corrupted * sign(theta_i - theta_j) * L`` with
    ``eps ~ N(0, sigma^2)``.
    """

    n_nodes: int = 30
    feature_dim: int = 5
    graph: str = "complete"
    n_pairs: int | None = None
    connected: bool = False
    votes_per_pair: int = 1
    theta_source: str = "uniform"
    beta_true: tuple | None = None
    sigma: float = 0.1
    outlier_magnitude: float | None = None
    flip_prob: float = 0.0
    error_model: str = "random_flip"
    quadratic: tuple = DEFAULT_QUADRATIC
    intentional_rate: float = DEFAULT_INTENTIONAL_RATE
    n_test: int = 0
    n_test_pairs: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.n_nodes < 2:
            raise ValidationError("n_nodes must be at least 2")
        if self.feature_dim < 1:
            raise ValidationError("feature_dim must be positive")
        if self.graph not in GRAPHS:
            raise ValidationError(f"graph must be one of {GRAPHS}")
        if self.theta_source not in THETA_SOURCES:
            raise ValidationError(f"theta_source must be one of {THETA_SOURCES}")
        if self.error_model not in ERROR_MODELS:
            raise ValidationError(f"error_model must be one of {ERROR_MODELS}")
        if not 0.0 <= self.flip_prob < 1.0:
            raise ValidationError(f"flip_prob must lie in [0, 1), got {self.flip_prob}")
        if not 0.0 <= self.intentional_rate <= 1.0:
            raise ValidationError("intentional_rate must lie in [0, 1]")
        if self.sigma < 0:
            raise ValidationError("sigma must be non-negative")
        if self.outlier_magnitude is not None and not (self.outlier_magnitude > 0 and self.sigma > 0):
            raise ValidationError("an outlier magnitude needs L > 0 and sigma > 0 (ONR = L/sigma)")
        if self.votes_per_pair < 1:
            raise ValidationError("votes_per_pair must be positive")
        max_pairs = self.n_nodes * (self.n_nodes - 1) // 2
        if self.graph == "random_pairs":
            if self.n_pairs is None or not 1 <= self.n_pairs <= max_pairs:
                raise ValidationError(
                    f"n_pairs must lie in [1, {max_pairs}] for {self.n_nodes} nodes, got {self.n_pairs}")
            if self.connected and self.n_pairs < self.n_nodes - 1:
                raise ValidationError("a connected graph needs at least n_nodes - 1 pairs")
        if self.theta_source == "linear" and self.beta_true is not None \
                and len(self.beta_true) != self.feature_dim:
            raise ValidationError("beta_true length must equal feature_dim")
        if self.n_test < 0:
            raise ValidationError("n_test must be non-negative")
        if self.n_test_pairs is not None and self.n_test_pairs > self.n_test * (self.n_test - 1) // 2:
            raise ValidationError("n_test_pairs exceeds the number of distinct test pairs")

    @property
    def onr(self) -> float | None:
        if self.outlier_magnitude is None:
            return None
        return self.outlier_magnitude / self.sigma

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("beta_true", "quadratic"):
            if d[key] is not None:
                d[key] = [float(v) for v in d[key]]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SyntheticSpec":
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ValidationError(f"unknown synthetic spec keys: {sorted(extra)}")
        d = dict(d)
        for key in ("beta_true", "quadratic"):
            if d.get(key) is not None:
                d[key] = tuple(float(v) for v in d[key])
        return cls(**d)


@dataclass(frozen=True)
class SyntheticDataset:
    graph: ComparisonGraph
    phi: np.ndarray
    truth_theta: GlobalScores
    truth_outliers: np.ndarray
    records: list
    vote_outliers: np.ndarray
    truth_beta: np.ndarray | None = None
    phi_test: np.ndarray | None = None
    theta_test: np.ndarray | None = None
    test_pairs: np.ndarray | None = None


def unintentional_error_prob(delta_theta, coeffs=DEFAULT_QUADRATIC):
    """``clamp(a d^2 + b d + c, 0, 1)`` at ``d = |delta_theta|``.

    For an upward parabola the value is held constant beyond its vertex, so
    large gaps never become harder than the vertex gap.
    """
    a, b, c = (float(v) for v in coeffs)
    d = np.abs(np.asarray(delta_theta, dtype=float))
    if a > 0:
        d = np.minimum(d, max(-b / (2 * a), 0.0))
    return np.clip(a * d * d + b * d + c, 0.0, 1.0)


def _scores_and_features(spec: SyntheticSpec, rng, n):
    d = spec.feature_dim
    if spec.theta_source == "uniform":
        theta = rng.uniform(-1.0, 1.0, n)
        raw = np.column_stack([theta, rng.standard_normal((n, d - 1))])
        rot = ortho_group.rvs(d, random_state=rng) if d > 1 else np.ones((1, 1))
        # phi = raw @ rot, so theta = phi @ rot' e1
        return theta, raw @ rot, rot[0].copy()
    phi = rng.standard_normal((n, d))
    if spec.beta_true is None:
        beta = rng.standard_normal(d)
        beta /= np.linalg.norm(beta)
    else:
        beta = np.asarray(spec.beta_true, dtype=float)
    return phi @ beta, phi, beta


def _spanning_tree(n, rng):
    perm = rng.permutation(n)
    parents = [perm[rng.integers(0, k)] for k in range(1, n)]
    return [(min(a, b), max(a, b)) for a, b in zip(perm[1:].tolist(), parents)]


def _sample_pairs(spec: SyntheticSpec, rng):
    n = spec.n_nodes
    if spec.graph == "complete":
        i, j = np.triu_indices(n, k=1)
        return np.column_stack([i, j])
    chosen = _spanning_tree(n, rng) if spec.connected else []
    taken = set(chosen)
    need = spec.n_pairs - len(chosen)
    total = n * (n - 1) // 2
    if need > 0:
        # draw linear indices of the upper triangle without replacement
        free = total - len(taken)
        if need > free // 2:
            iu = np.column_stack(np.triu_indices(n, k=1))
            pool = [tuple(p) for p in iu.tolist() if tuple(p) not in taken]
            pick = rng.choice(len(pool), need, replace=False)
            chosen += [pool[k] for k in sorted(pick.tolist())]
        else:
            extra = []
            while len(extra) < need:
                a = rng.integers(0, n, size=2 * (need - len(extra)))
                b = rng.integers(0, n, size=a.size)
                for u, v in zip(a.tolist(), b.tolist()):
                    p = (min(u, v), max(u, v))
                    if u != v and p not in taken:
                        taken.add(p)
                        extra.append(p)
                        if len(extra) == need:
                            break
            chosen += extra
    return np.array(sorted(chosen), dtype=np.int64)


def _votes(spec: SyntheticSpec, rng, theta, pairs):
    """Winner per vote and whether the vote was corrupted."""
    k = spec.votes_per_pair
    i = np.repeat(pairs[:, 0], k)
    j = np.repeat(pairs[:, 1], k)
    delta = theta[i] - theta[j]
    truth_sign = np.where(delta >= 0, 1.0, -1.0)
    u_err = rng.random(i.size)
    u_rand = rng.random(i.size)
    u_coin = rng.random(i.size)
    eps = rng.normal(0.0, spec.sigma, i.size) if spec.sigma > 0 else np.zeros(i.size)

    if spec.error_model == "random_flip":
        corrupt = u_err < spec.flip_prob
        if spec.outlier_magnitude is None:
            label = np.where(corrupt, -truth_sign, truth_sign)
        else:
            latent = delta + eps - corrupt * truth_sign * spec.outlier_magnitude
            label = np.where(latent >= 0, 1.0, -1.0)
    else:
        q = unintentional_error_prob(delta, spec.quadratic)
        label = np.where(u_err < q, -truth_sign, truth_sign)
        if spec.error_model == "mixed":
            random_label = np.where(u_coin < 0.5, 1.0, -1.0)
            label = np.where(u_rand < spec.intentional_rate, random_label, label)
        corrupt = label != truth_sign
    winner = np.where(label > 0, i, j)
    loser = np.where(label > 0, j, i)
    return winner, loser, corrupt


def generate(spec: SyntheticSpec) -> SyntheticDataset:
    """Draw scores, features, pairs and votes; reproducible from ``spec.seed``."""
    rng = np.random.default_rng(spec.seed)
    n_all = spec.n_nodes + spec.n_test
    theta_all, phi_all, beta = _scores_and_features(spec, rng, n_all)
    theta, phi = theta_all[: spec.n_nodes], phi_all[: spec.n_nodes]
    pairs = _sample_pairs(spec, rng)
    winner, loser, corrupt = _votes(spec, rng, theta, pairs)
    records = [AnnotationRecord(int(a), int(b)) for a, b in zip(winner.tolist(), loser.tolist())]
    g = build_graph(records, spec.n_nodes)

    # an edge is an outlier when any of its votes was corrupted
    bad = np.zeros(g.n_edges, dtype=np.int64)
    for a, b, c in zip(winner.tolist(), loser.tolist(), corrupt.tolist()):
        if c:
            bad[g.edge_index(a, b)] = 1

    test = {}
    if spec.n_test:
        theta_test = theta_all[spec.n_nodes:]
        iu = np.column_stack(np.triu_indices(spec.n_test, k=1))
        if spec.n_test_pairs is not None:
            iu = iu[np.sort(rng.choice(len(iu), spec.n_test_pairs, replace=False))]
        test = dict(phi_test=phi_all[spec.n_nodes:], theta_test=theta_test, test_pairs=iu)
    return SyntheticDataset(
        graph=g, phi=phi, truth_theta=GlobalScores(theta), truth_outliers=bad,
        records=records, vote_outliers=corrupt.astype(np.int64), truth_beta=beta, **test,
    )


def condorcet_fixture(variant: str) -> SyntheticDataset:
    """Five items A..E with scores 1..5 and scalar features equal to the scores.

    ``a``: each chain pair (B over A, ..., E over D) gets 3 correct votes and
    1 reversed; the A-E pair gets a 2-1 majority for the wrong direction A>E.
    ``b``: unanimous 2-vote chain, A-E pair split 3 wrong to 2 right.
    ``c``: one direction per pair; 2-vote chain plus a single planted A>E.
    """
    A, B, C, D, E = range(5)
    chain = [(B, A), (C, B), (D, C), (E, D)]
    if variant == "a":
        edges = [(s, d, 3) for s, d in chain] + [(d, s, 1) for s, d in chain]
        edges += [(A, E, 2), (E, A, 1)]
        outliers = {(d, s) for s, d in chain} | {(A, E)}
    elif variant == "b":
        edges = [(s, d, 2) for s, d in chain] + [(A, E, 3), (E, A, 2)]
        outliers = {(A, E)}
    elif variant == "c":
        edges = [(s, d, 2) for s, d in chain] + [(A, E, 1)]
        outliers = {(A, E)}
    else:
        raise ValidationError(f"unknown fixture variant {variant!r}; expected a, b or c")
    g = ComparisonGraph.from_edges(edges, 5)
    records = [AnnotationRecord(s, d) for s, d, w in g.edges() for _ in range(w)]
    flags = np.array([(s, d) in outliers for s, d, _ in g.edges()], dtype=np.int64)
    votes = np.array([(r.preferred, r.other) in outliers for r in records], dtype=np.int64)
    theta = np.arange(1.0, 6.0)
    return SyntheticDataset(
        graph=g, phi=theta[:, None].copy(), truth_theta=GlobalScores(theta),
        truth_outliers=flags, records=records, vote_outliers=votes, truth_beta=np.ones(1),
    )
