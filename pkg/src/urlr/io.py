"""Readers and writers for the CSV, model and JSON formats.

Floats are written with ``repr`` so a value read back is bit-identical.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .exceptions import ValidationError
from .graph import AnnotationRecord, ComparisonGraph
from .regpath import OutlierPath
from .solver import RankModel

LABEL_HEADER = ["preferred", "other"]
GRAPH_HEADER = ["src", "dst", "weight"]
PATH_HEADER = ["edge_index", "src", "dst", "activation_lambda", "rank"]
METRICS_HEADER = ["method", "seed", "p", "error_rate", "onr", "kendall_distance", "auc"]
TRUTH_HEADER = ["edge_index", "is_outlier"]
SCORES_HEADER = ["id", "score"]


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _write_rows(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _read_rows(path, expected=None, optional=()):
    """Return ``(header, [(line_no, row), ...])`` after checking the header."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ValidationError(f"{path}: empty file") from None
        if expected is not None:
            allowed = [expected] + [expected + list(optional[:k]) for k in range(1, len(optional) + 1)]
            if header not in allowed:
                raise ValidationError(f"{path}:1: expected header {','.join(expected)}, got {','.join(header)}")
        rows = [(k, row) for k, row in enumerate(reader, start=2) if row]
    return header, rows


def _int(path, line, value, what):
    try:
        v = int(value)
    except ValueError:
        raise ValidationError(f"{path}:{line}: {what} is not an integer: {value!r}") from None
    if v < 0:
        raise ValidationError(f"{path}:{line}: {what} must be non-negative, got {v}")
    return v


def _float(path, line, value, what):
    try:
        v = float(value)
    except ValueError:
        raise ValidationError(f"{path}:{line}: {what} is not a number: {value!r}") from None
    if not np.isfinite(v):
        raise ValidationError(f"{path}:{line}: {what} is not finite")
    return v


def read_labels(path) -> list[AnnotationRecord]:
    header, rows = _read_rows(path, LABEL_HEADER, ["annotator"])
    out = []
    for line, row in rows:
        if len(row) != len(header):
            raise ValidationError(f"{path}:{line}: expected {len(header)} fields, got {len(row)}")
        i = _int(path, line, row[0], "preferred")
        j = _int(path, line, row[1], "other")
        if i == j:
            raise ValidationError(f"{path}:{line}: self-comparison of node {i}")
        out.append(AnnotationRecord(i, j, row[2] if len(row) > 2 else None))
    return out


def write_labels(path, records):
    has_annot = any(getattr(r, "annotator", None) is not None for r in records)
    header = LABEL_HEADER + (["annotator"] if has_annot else [])
    rows = [(r[0], r[1]) + ((r[2] or "",) if has_annot else ()) for r in records]
    _write_rows(path, header, rows)


def read_graph(path, n_nodes=None) -> ComparisonGraph:
    _, rows = _read_rows(path, GRAPH_HEADER)
    edges = []
    for line, row in rows:
        if len(row) != 3:
            raise ValidationError(f"{path}:{line}: expected 3 fields, got {len(row)}")
        s, d, w = (_int(path, line, v, k) for v, k in zip(row, GRAPH_HEADER))
        if w < 1:
            raise ValidationError(f"{path}:{line}: weight must be >= 1")
        edges.append((s, d, w))
    n = n_nodes if n_nodes is not None else 1 + max((max(s, d) for s, d, _ in edges), default=-1)
    return ComparisonGraph.from_edges(edges, n)


def write_graph(path, g: ComparisonGraph):
    _write_rows(path, GRAPH_HEADER, g.edges())


def read_features(path) -> np.ndarray:
    header, rows = _read_rows(path)
    if not header or header[0] != "id" or header[1:] != [f"f{k}" for k in range(len(header) - 1)] \
            or len(header) < 2:
        raise ValidationError(f"{path}:1: expected header id,f0,f1,...")
    phi = np.empty((len(rows), len(header) - 1))
    for k, (line, row) in enumerate(rows):
        if len(row) != len(header):
            raise ValidationError(f"{path}:{line}: expected {len(header)} fields, got {len(row)}")
        node = _int(path, line, row[0], "id")
        if node != k:
            raise ValidationError(f"{path}:{line}: ids must run 0..N-1 in order; expected {k}, got {node}")
        phi[k] = [_float(path, line, v, f"f{c}") for c, v in enumerate(row[1:])]
    return phi


def write_features(path, phi):
    phi = np.asarray(phi, dtype=float)
    header = ["id"] + [f"f{k}" for k in range(phi.shape[1])]
    _write_rows(path, header, ([i] + row.tolist() for i, row in enumerate(phi)))


def write_model(path, model: RankModel):
    lines = [f"mu {model.mu!r}", f"dim {model.dim}", "beta"] + [repr(float(b)) for b in model.beta]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_model(path) -> RankModel:
    lines = [ln.strip() for ln in Path(path).read_text(encoding="utf-8").splitlines()]
    try:
        key_mu, mu = lines[0].split()
        key_dim, dim = lines[1].split()
        assert key_mu == "mu" and key_dim == "dim" and lines[2] == "beta"
        mu, dim = float(mu), int(dim)
        beta = [float(v) for v in lines[3:] if v]
    except (IndexError, ValueError, AssertionError):
        raise ValidationError(f"{path}: not a model file (expected mu, dim, beta lines)") from None
    if len(beta) != dim:
        raise ValidationError(f"{path}: dim is {dim} but {len(beta)} coefficients follow")
    return RankModel(np.array(beta), mu)


def write_scores(path, scores):
    _write_rows(path, SCORES_HEADER, enumerate(np.asarray(scores, dtype=float).tolist()))


def read_scores(path) -> np.ndarray:
    _, rows = _read_rows(path, SCORES_HEADER)
    out = np.empty(len(rows))
    for k, (line, row) in enumerate(rows):
        if len(row) != 2:
            raise ValidationError(f"{path}:{line}: expected 2 fields, got {len(row)}")
        if _int(path, line, row[0], "id") != k:
            raise ValidationError(f"{path}:{line}: ids must run 0..N-1 in order")
        out[k] = _float(path, line, row[1], "score")
    return out


def write_path(path, g: ComparisonGraph, op: OutlierPath):
    ranks = op.ranks()
    rows = ((e, int(g.src[e]), int(g.dst[e]), float(op.activation_lambda[e]), int(ranks[e]))
            for e in range(g.n_edges))
    _write_rows(path, PATH_HEADER, rows)


def read_path(path) -> OutlierPath:
    _, rows = _read_rows(path, PATH_HEADER)
    act = np.empty(len(rows))
    rank = np.empty(len(rows), dtype=np.int64)
    for k, (line, row) in enumerate(rows):
        if _int(path, line, row[0], "edge_index") != k:
            raise ValidationError(f"{path}:{line}: edge indices must run 0..|E|-1 in order")
        act[k] = _float(path, line, row[3], "activation_lambda")
        rank[k] = _int(path, line, row[4], "rank")
    order = np.empty_like(rank)
    if np.any(np.sort(rank) != np.arange(rank.size)):
        raise ValidationError(f"{path}: ranks are not a permutation of 0..|E|-1")
    order[rank] = np.arange(rank.size)
    return OutlierPath(act, order, np.zeros(0))


def write_truth(path, truth_outliers):
    _write_rows(path, TRUTH_HEADER, enumerate(np.asarray(truth_outliers, dtype=np.int64).tolist()))


def read_truth(path) -> np.ndarray:
    _, rows = _read_rows(path, TRUTH_HEADER)
    out = np.empty(len(rows), dtype=np.int64)
    for k, (line, row) in enumerate(rows):
        if _int(path, line, row[0], "edge_index") != k:
            raise ValidationError(f"{path}:{line}: edge indices must run 0..|E|-1 in order")
        v = _int(path, line, row[1], "is_outlier")
        if v > 1:
            raise ValidationError(f"{path}:{line}: is_outlier must be 0 or 1")
        out[k] = v
    return out


def write_metrics(path, rows):
    _write_rows(path, METRICS_HEADER, ([r.get(k) for k in METRICS_HEADER] for r in rows))


def write_csv(path, header, rows):
    _write_rows(path, header, rows)


def write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=False) + "\n", encoding="utf-8")


def read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from None
