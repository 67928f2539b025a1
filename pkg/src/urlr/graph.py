"""Pairwise comparison graphs built from annotator votes.

An edge ``src -> dst`` means ``src`` was judged to have *more* of the
property than ``dst``; its weight counts the votes cast in that direction.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components as _cc

from .exceptions import ValidationError


class AnnotationRecord(NamedTuple):
    preferred: int
    other: int
    annotator: str | None = None


@dataclass(frozen=True)
class ComparisonGraph:
    """Directed, vote-weighted comparison graph.

    Edges are stored in lexicographic ``(src, dst)`` order; that order fixes
    the rows of every matrix derived from the graph.
    """

    n_nodes: int
    src: np.ndarray
    dst: np.ndarray
    weight: np.ndarray
    _index: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        src = np.asarray(self.src, dtype=np.int64).reshape(-1)
        dst = np.asarray(self.dst, dtype=np.int64).reshape(-1)
        weight = np.asarray(self.weight, dtype=np.int64).reshape(-1)
        if not (src.shape == dst.shape == weight.shape):
            raise ValidationError("src, dst and weight must have equal length")
        if self.n_nodes < 0:
            raise ValidationError("n_nodes must be non-negative")
        if src.size:
            if np.any(src == dst):
                raise ValidationError("self-loops are not allowed")
            if min(src.min(), dst.min()) < 0 or max(src.max(), dst.max()) >= self.n_nodes:
                raise ValidationError(f"node ids must lie in [0, {self.n_nodes})")
            if np.any(weight < 1):
                raise ValidationError("edge weights must be >= 1")
            keys = src * self.n_nodes + dst
            if np.any(np.diff(keys) <= 0):
                raise ValidationError("edges must be unique and sorted by (src, dst)")
        for name, arr in (("src", src), ("dst", dst), ("weight", weight)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_edges(cls, edges: Iterable[tuple[int, int, int]], n_nodes: int) -> "ComparisonGraph":
        """Build from ``(src, dst, weight)`` triples; duplicates are summed."""
        counts: Counter = Counter()
        for s, d, w in edges:
            counts[(int(s), int(d))] += int(w)
        keys = sorted(counts)
        return cls(
            n_nodes=int(n_nodes),
            src=np.array([k[0] for k in keys], dtype=np.int64),
            dst=np.array([k[1] for k in keys], dtype=np.int64),
            weight=np.array([counts[k] for k in keys], dtype=np.int64),
        )

    @property
    def n_edges(self) -> int:
        return int(self.src.size)

    def edges(self) -> list[tuple[int, int, int]]:
        return list(zip(self.src.tolist(), self.dst.tolist(), self.weight.tolist()))

    def edge_index(self, src: int, dst: int) -> int:
        """Row index of edge ``src -> dst``; ``KeyError`` if absent."""
        if self._index is None:
            object.__setattr__(
                self, "_index", {(s, d): k for k, (s, d, _) in enumerate(self.edges())}
            )
        return self._index[(int(src), int(dst))]

    def subgraph(self, keep: np.ndarray) -> "ComparisonGraph":
        """Graph restricted to edges where ``keep`` is truthy."""
        keep = np.asarray(keep, dtype=bool)
        if keep.shape != (self.n_edges,):
            raise ValidationError(f"mask length {keep.size} != number of edges {self.n_edges}")
        return ComparisonGraph(self.n_nodes, self.src[keep], self.dst[keep], self.weight[keep])

    def relabel(self, perm: np.ndarray) -> "ComparisonGraph":
        """Rename node ``i`` to ``perm[i]``."""
        perm = np.asarray(perm, dtype=np.int64)
        return ComparisonGraph.from_edges(
            zip(perm[self.src].tolist(), perm[self.dst].tolist(), self.weight.tolist()),
            self.n_nodes,
        )


def build_graph(records, n_nodes: int) -> ComparisonGraph:
    """Aggregate annotator records into a weighted comparison graph.

    ``records`` may hold :class:`AnnotationRecord` objects or plain
    ``(preferred, other)`` pairs. Each record contributes one vote to the
    edge ``preferred -> other``.
    """
    n_nodes = int(n_nodes)
    counts: Counter = Counter()
    for k, rec in enumerate(records):
        i, j = int(rec[0]), int(rec[1])
        if i == j:
            raise ValidationError(f"record {k}: self-comparison of node {i}")
        if not (0 <= i < n_nodes and 0 <= j < n_nodes):
            raise ValidationError(f"record {k}: node id out of range [0, {n_nodes}): ({i}, {j})")
        counts[(i, j)] += 1
    return ComparisonGraph.from_edges(((s, d, w) for (s, d), w in counts.items()), n_nodes)


def incidence_matrix(g: ComparisonGraph) -> sp.csr_matrix:
    """Sparse ``|E| x N`` incidence matrix: +1 at the source, -1 at the target."""
    m = g.n_edges
    rows = np.repeat(np.arange(m), 2)
    cols = np.column_stack([g.src, g.dst]).reshape(-1)
    vals = np.tile([1.0, -1.0], m)
    return sp.csr_matrix((vals, (rows, cols)), shape=(m, g.n_nodes))


def majority_vote_filter(g: ComparisonGraph) -> ComparisonGraph:
    """Keep, for each unordered pair, only the direction with strictly more votes.

    Tied pairs are dropped entirely.
    """
    w = {(s, d): c for s, d, c in g.edges()}
    kept = [(s, d, c) for (s, d), c in w.items() if c > w.get((d, s), 0)]
    return ComparisonGraph.from_edges(kept, g.n_nodes)


def connected_components(g: ComparisonGraph) -> list[list[int]]:
    """Weakly connected components, each sorted, ordered by smallest member."""
    n = g.n_nodes
    if n == 0:
        return []
    adj = sp.csr_matrix((np.ones(g.n_edges), (g.src, g.dst)), shape=(n, n))
    _, labels = _cc(adj, directed=True, connection="weak")
    groups: dict[int, list[int]] = {}
    for node, lab in enumerate(labels.tolist()):
        groups.setdefault(lab, []).append(node)
    return sorted(groups.values(), key=lambda comp: comp[0])


def component_labels(g: ComparisonGraph) -> np.ndarray:
    """Component id per node, numbered as in :func:`connected_components`."""
    labels = np.empty(g.n_nodes, dtype=np.int64)
    for k, comp in enumerate(connected_components(g)):
        labels[comp] = k
    return labels
