"""Trial runner for synthetic sweeps over pruning rate, error rate, ONR or density."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

import numpy as np

from .exceptions import NumericalError, ValidationError
from .metrics import kendall_distance, outlier_roc
from .pipeline import PipelineConfig, fit
from .solver import predict
from .synth import SyntheticSpec, generate

AXES = ("prune", "error_rate", "onr", "density")
CURVE_HEADER = ["axis", "value", "method", "seed", "kendall_distance", "kendall_correlation",
                "auc", "error"]


def apply_axis(spec: SyntheticSpec, cfg: PipelineConfig, axis: str, value: float):
    """Return ``(spec, cfg)`` with the swept quantity set to ``value``."""
    if axis == "prune":
        return spec, replace(cfg, prune_percent=float(value))
    if axis == "error_rate":
        if spec.error_model == "mixed":
            return replace(spec, intentional_rate=float(value)), cfg
        return replace(spec, flip_prob=float(value)), cfg
    if axis == "onr":
        sigma = spec.sigma if spec.sigma > 0 else 0.1
        return replace(spec, sigma=sigma, outlier_magnitude=float(value) * sigma), cfg
    if axis == "density":
        n_pairs = int(round(float(value) * spec.n_nodes))
        return replace(spec, graph="random_pairs", n_pairs=n_pairs), cfg
    raise ValidationError(f"unknown axis {axis!r}; expected one of {AXES}")


def score_fit(ds, result) -> dict:
    """Kendall distance on held-out items when present, else on the training nodes."""
    if ds.phi_test is not None:
        pred = predict(result.model, ds.phi_test)
        dist = kendall_distance(pred, ds.theta_test, ds.test_pairs)
    else:
        dist = kendall_distance(predict(result.model, ds.phi), ds.truth_theta.theta)
    auc = None
    t = ds.truth_outliers
    if result.outlier_order is not None and 0 < t.sum() < t.size:
        auc = outlier_roc(result.outlier_order, t)[0]
    return {"kendall_distance": dist, "kendall_correlation": 1.0 - 2.0 * dist, "auc": auc}


def run_trial(spec: SyntheticSpec, cfg: PipelineConfig, methods, axis: str, value: float, seed: int):
    """One dataset, every method on it. Failures become rows with an error message."""
    spec_v, cfg_v = replace(spec, seed=int(seed)), cfg
    rows = []
    try:
        spec_v, cfg_v = apply_axis(spec_v, cfg, axis, value)
        ds = generate(spec_v)
    except (ValidationError, NumericalError) as exc:
        return [_row(axis, value, m, seed, spec_v, cfg_v, error=str(exc)) for m in methods]
    for m in methods:
        c = replace(cfg_v, method=m)
        try:
            metrics = score_fit(ds, fit(ds.graph, ds.phi, c))
            rows.append(_row(axis, value, m, seed, spec_v, c, **metrics))
        except (ValidationError, NumericalError) as exc:
            rows.append(_row(axis, value, m, seed, spec_v, c, error=str(exc)))
    return rows


def _row(axis, value, method, seed, spec, cfg, kendall_distance=None, kendall_correlation=None,
         auc=None, error=""):
    rate = spec.intentional_rate if spec.error_model == "mixed" else spec.flip_prob
    return {
        "axis": axis, "value": float(value), "method": method, "seed": int(seed),
        "p": float(cfg.prune_percent), "error_rate": float(rate), "onr": spec.onr,
        "kendall_distance": kendall_distance, "kendall_correlation": kendall_correlation,
        "auc": auc, "error": error,
    }


def _trial(args):
    return run_trial(*args)


def sweep(spec: SyntheticSpec, cfg: PipelineConfig, axis: str, values, methods, seeds, jobs: int = 1):
    """Rows sorted by (method, seed, value), independent of completion order."""
    if axis not in AXES:
        raise ValidationError(f"unknown axis {axis!r}; expected one of {AXES}")
    tasks = [(spec, cfg, tuple(methods), axis, float(v), int(s)) for v in values for s in seeds]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_trial, tasks))
    else:
        chunks = [_trial(t) for t in tasks]
    rows = [r for chunk in chunks for r in chunk]
    order = {m: k for k, m in enumerate(methods)}
    rows.sort(key=lambda r: (order[r["method"]], r["seed"], r["value"]))
    return rows


def summarize(rows, metric: str = "kendall_distance"):
    """Mean and sample std of ``metric`` per (method, value) over successful trials."""
    groups: dict = {}
    for r in rows:
        if r["error"] or r[metric] is None:
            continue
        groups.setdefault((r["method"], r["value"]), []).append(r[metric])
    out = {}
    for key, vals in groups.items():
        v = np.asarray(vals, dtype=float)
        out[key] = (float(v.mean()), float(v.std(ddof=1)) if v.size > 1 else 0.0, int(v.size))
    return out


def curve_rows(rows):
    """Per-trial rows followed by mean/std summary rows, in ``CURVE_HEADER`` order."""
    out = [[r[k] for k in CURVE_HEADER] for r in rows]
    stats = {m: summarize(rows, m) for m in ("kendall_distance", "kendall_correlation", "auc")}
    methods = list(dict.fromkeys(r["method"] for r in rows))
    values = sorted({r["value"] for r in rows})
    axis = rows[0]["axis"] if rows else ""
    for label, pick in (("mean", 0), ("std", 1)):
        for m in methods:
            for v in values:
                cells = [stats[k].get((m, v), (None, None))[pick] for k in
                         ("kendall_distance", "kendall_correlation", "auc")]
                if all(c is None for c in cells):
                    continue
                out.append([axis, v, m, label] + cells + [""])
    return out


def paired_differences(rows, a: str, b: str, metric: str = "kendall_correlation"):
    """``{value: array of metric(a) - metric(b)}`` over seeds where both succeeded."""
    table = {(r["method"], r["value"], r["seed"]): r[metric] for r in rows
             if not r["error"] and r[metric] is not None}
    out: dict = {}
    for (m, v, s), x in table.items():
        if m == a and (b, v, s) in table:
            out.setdefault(v, []).append(x - table[(b, v, s)])
    return {v: np.asarray(d) for v, d in sorted(out.items())}


def no_reversal(diffs) -> bool:
    """True when no mean paired difference is negative by more than one std."""
    for d in diffs.values():
        sd = float(d.std(ddof=1)) if d.size > 1 else 0.0
        if d.mean() < 0 and -d.mean() > sd:
            return False
    return True


def seeds_from(base: int, count: int):
    if count < 1:
        raise ValidationError("need at least one seed")
    return list(range(int(base), int(base) + int(count)))


def is_nan(x) -> bool:
    return x is None or (isinstance(x, float) and math.isnan(x))
