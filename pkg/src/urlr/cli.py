"""Command-line entry point: ``urlr {fit,predict,eval,sweep,synth,fixtures}``.

Exit codes: 0 success, 1 invalid input or configuration, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import logging
import sys
import time
from dataclasses import replace
from importlib import metadata
from pathlib import Path

import numpy as np

from . import io
from .exceptions import NumericalError, ValidationError
from .graph import build_graph
from .metrics import kendall_distance, outlier_roc
from .pipeline import PipelineConfig, fit
from .regpath import PathSpec
from .solver import predict
from .sweep import AXES, CURVE_HEADER, curve_rows, seeds_from, sweep
from .synth import SyntheticSpec, condorcet_fixture, generate

log = logging.getLogger("urlr")

CONFIG_KEYS = ("method", "prune_percent", "mu", "pca_dim", "n_lambdas", "lambda_min_ratio",
               "cd_tolerance", "max_sweeps")


class _Parser(argparse.ArgumentParser):
    # usage errors are validation failures, not numerical ones
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def _digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _manifest(out: Path, command: str, config: dict, inputs: dict, seed, started: float):
    io.write_json(out / "manifest.json", {
        "command": command,
        "config": config,
        "inputs": {k: {"path": str(v), "sha256": _digest(v)} for k, v in inputs.items() if v},
        "seed": seed,
        "version": _version(),
        "wall_clock_seconds": round(time.perf_counter() - started, 3),
    })


def _config(args) -> PipelineConfig:
    """JSON config (``--config``) overridden by any flag given explicitly."""
    raw = io.read_json(args.config) if getattr(args, "config", None) else {}
    unknown = set(raw) - set(CONFIG_KEYS)
    if unknown:
        raise ValidationError(f"unknown config keys: {sorted(unknown)}")
    for key in CONFIG_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            raw[key] = val
    path = PathSpec(**{k: raw[k] for k in ("n_lambdas", "lambda_min_ratio", "cd_tolerance",
                                           "max_sweeps") if k in raw})
    return PipelineConfig(method=raw.get("method", "urlr"),
                          prune_percent=float(raw.get("prune_percent", 20.0)),
                          mu=float(raw.get("mu", 1e-3)), pca_dim=raw.get("pca_dim"), path=path)


def _add_config_flags(p):
    p.add_argument("--config", help="JSON file with pipeline settings; flags override it")
    p.add_argument("--method", choices=["urlr", "raw", "majority_vote", "huber_lasso_fl"])
    p.add_argument("--prune", dest="prune_percent", type=float, help="pruning rate p in percent")
    p.add_argument("--mu", type=float)
    p.add_argument("--pca-dim", dest="pca_dim", type=int)
    p.add_argument("--n-lambdas", dest="n_lambdas", type=int)
    p.add_argument("--lambda-min-ratio", dest="lambda_min_ratio", type=float)
    p.add_argument("--cd-tolerance", dest="cd_tolerance", type=float)
    p.add_argument("--max-sweeps", dest="max_sweeps", type=int)


def cmd_fit(args) -> int:
    started = time.perf_counter()
    cfg = _config(args)
    if cfg.method in ("raw", "majority_vote") and args.prune_percent is not None:
        log.warning("--prune is ignored for method %s; every surviving edge is kept", cfg.method)
    phi = io.read_features(args.features)
    records = io.read_labels(args.labels)
    for k, r in enumerate(records):
        for node in (r.preferred, r.other):
            if node >= phi.shape[0]:
                raise ValidationError(f"{args.labels}:{k + 2}: node {node} has no feature row")
    g = build_graph(records, phi.shape[0])
    result = fit(g, phi, cfg)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    io.write_model(out / "model.txt", result.model)
    pruned = result.pruned_edges
    io.write_csv(out / "pruned.csv", ["edge_index", "src", "dst", "weight"],
                 ([int(e), int(g.src[e]), int(g.dst[e]), int(g.weight[e])] for e in pruned))
    if result.outlier_order is not None:
        io.write_path(out / "path.csv", g, result.outlier_order)
    io.write_json(out / "result.json", {
        "method": cfg.method,
        "config": cfg.to_dict(),
        "model_file": "model.txt",
        "pruned_edges": [[int(g.src[e]), int(g.dst[e])] for e in pruned],
        "diagnostics": result.diagnostics,
        "metrics": {"n_edges": g.n_edges, "n_pruned": int(pruned.size)},
    })
    _manifest(out, "fit", cfg.to_dict(), {"labels": args.labels, "features": args.features,
                                          "config": args.config}, None, started)
    return 0


def cmd_predict(args) -> int:
    model = io.read_model(args.model)
    scores = predict(model, io.read_features(args.features))
    io.write_scores(args.out, scores)
    return 0


def cmd_eval(args) -> int:
    row = {"method": args.method, "seed": args.seed, "p": args.p, "error_rate": None,
           "onr": None, "kendall_distance": None, "auc": None}
    if args.truth_order:
        if not args.scores:
            raise ValidationError("--truth-order needs --scores")
        pred = io.read_scores(args.scores)
        truth = io.read_scores(args.truth_order)
        if pred.size != truth.size:
            raise ValidationError(f"scores cover {pred.size} items but the truth covers {truth.size}")
        row["kendall_distance"] = kendall_distance(pred, truth)
    if args.truth_outliers:
        if not args.path:
            raise ValidationError("--truth-outliers needs --path (an outlier path dump)")
        op = io.read_path(args.path)
        truth = io.read_truth(args.truth_outliers)
        if truth.size != op.n_edges:
            raise ValidationError(f"path has {op.n_edges} edges but the truth covers {truth.size}")
        row["auc"] = outlier_roc(op, truth)[0]
    if row["kendall_distance"] is None and row["auc"] is None:
        raise ValidationError("nothing to evaluate: give --truth-order and/or --truth-outliers")
    io.write_metrics(args.out, [row])
    return 0


def _synth_spec(args) -> SyntheticSpec:
    raw = io.read_json(args.spec) if args.spec else {}
    spec = SyntheticSpec.from_dict(raw)
    if getattr(args, "seed", None) is not None:
        spec = replace(spec, seed=args.seed)
    return spec


def cmd_sweep(args) -> int:
    started = time.perf_counter()
    spec = _synth_spec(args)
    cfg = _config(args)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    for m in methods:
        replace(cfg, method=m)
    try:
        values = [float(v) for v in args.values.split(",")]
    except ValueError:
        raise ValidationError(f"--values must be comma-separated numbers, got {args.values!r}") from None
    seeds = seeds_from(spec.seed, args.seeds)
    rows = sweep(spec, cfg, args.axis, values, methods, seeds, jobs=max(1, args.jobs))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    io.write_csv(out / f"curve_{args.axis}.csv", CURVE_HEADER, curve_rows(rows))
    io.write_metrics(out / "metrics.csv", rows)
    failed = [r for r in rows if r["error"]]
    for r in failed:
        log.warning("trial failed (%s, seed %s, %s=%s): %s", r["method"], r["seed"], args.axis,
                    r["value"], r["error"])
    _manifest(out, "sweep", {"spec": spec.to_dict(), "pipeline": cfg.to_dict(), "axis": args.axis,
                             "values": values, "methods": methods, "seeds": seeds},
              {"spec": args.spec, "config": args.config}, spec.seed, started)
    return 0


def _export(out: Path, ds):
    out.mkdir(parents=True, exist_ok=True)
    io.write_labels(out / "labels.csv", ds.records)
    io.write_features(out / "features.csv", ds.phi)
    io.write_graph(out / "graph.csv", ds.graph)
    io.write_truth(out / "truth.csv", ds.truth_outliers)
    io.write_scores(out / "theta.csv", ds.truth_theta.theta)
    if ds.phi_test is not None:
        io.write_features(out / "test_features.csv", ds.phi_test)
        io.write_scores(out / "test_theta.csv", ds.theta_test)


def cmd_synth(args) -> int:
    started = time.perf_counter()
    spec = _synth_spec(args)
    out = Path(args.out)
    _export(out, generate(spec))
    _manifest(out, "synth", spec.to_dict(), {"spec": args.spec}, spec.seed, started)
    return 0


def cmd_fixtures(args) -> int:
    started = time.perf_counter()
    variants = ["a", "b", "c"] if args.variant == "all" else [args.variant]
    out = Path(args.out)
    for v in variants:
        _export(out / v if len(variants) > 1 else out, condorcet_fixture(v))
    _manifest(out, "fixtures", {"variants": variants}, {}, None, started)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="urlr", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fit", help="fit a ranking model from labels and features")
    p.add_argument("labels")
    p.add_argument("features")
    p.add_argument("--out", required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="score items with a saved model")
    p.add_argument("model")
    p.add_argument("features")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", help="Kendall distance and/or outlier AUC")
    p.add_argument("--scores")
    p.add_argument("--truth-order", dest="truth_order", help="id,score file of ground-truth scores")
    p.add_argument("--truth-outliers", dest="truth_outliers", help="edge_index,is_outlier file")
    p.add_argument("--path", help="outlier path dump written by fit")
    p.add_argument("--method", default="")
    p.add_argument("--seed", type=int)
    p.add_argument("--p", type=float)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="synthetic trials along one axis")
    p.add_argument("--spec", help="JSON synthetic spec")
    p.add_argument("--axis", required=True, choices=AXES)
    p.add_argument("--values", required=True, help="comma-separated axis values")
    p.add_argument("--methods", default="urlr,huber_lasso_fl,raw")
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--seed", type=int, help="first seed (default: the spec's)")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("synth", help="write a synthetic dataset")
    p.add_argument("--spec", help="JSON synthetic spec")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("fixtures", help="write the five-item cycle fixtures")
    p.add_argument("--variant", choices=["a", "b", "c", "all"], default="all")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fixtures)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (ValidationError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except np.linalg.LinAlgError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
