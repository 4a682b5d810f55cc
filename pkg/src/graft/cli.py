"""Command-line interface.

Subcommands: ``sample`` (standalone row selection), ``train`` (full run
with trace export), ``bench`` (operation-count table for the selection
kernel), ``fit-curve`` (exponential gain-curve fit of an efficiency CSV).

Exit codes: 0 success, 1 user/input error, 2 degraded-but-valid result,
3 numerical failure.  The seed precedence for ``train`` is
flag > GRAFT_SEED env var > config file.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import inspect
import json
import math
import os
import sys
import time

import numpy as np

from . import datasets
from .errors import FitFailed, GraftError, TooLarge
from .features import extract_svd_features, extract_variance_features
from .harness import TrainConfig, train
from .linalg import subspace_similarity
from .maxvol import brute_force_maxvol, conventional_maxvol, fast_maxvol
from .metrics import (
    DEFAULT_INTENSITY_KG_PER_KWH,
    DEFAULT_JOULES_PER_EVAL,
    export_trace,
    fit_gain_curve,
    proxy_emissions,
)


def _read_matrix(path: str) -> np.ndarray:
    """Numeric CSV -> matrix; a non-numeric first line is taken as header."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if not row:
                continue
            try:
                rows.append([float(x) for x in row])
            except ValueError:
                if lineno == 1:
                    continue  # header
                raise SystemExit(f"error: {path}: line {lineno}: non-numeric value")
    if not rows:
        raise SystemExit(f"error: {path}: no numeric rows")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise SystemExit(f"error: {path}: ragged rows (widths {sorted(widths)})")
    return np.asarray(rows)


def _selection_json(sel) -> dict:
    return {
        "indices": list(sel.indices),
        "pivot_magnitudes": list(sel.pivot_magnitudes),
        "log_abs_det": sel.log_abs_det,
        "truncated": sel.truncated,
        "elementary_op_count": sel.elementary_op_count,
    }


def cmd_sample(args) -> int:
    if args.input == "iris":
        A = datasets.iris_matrix()
    else:
        A = _read_matrix(args.input)
    if args.extractor == "variance":
        feats = extract_variance_features(A, min(args.rank, A.shape[1]))
    else:
        feats = extract_svd_features(A, min(args.rank, A.shape[0], A.shape[1]))
    R = min(args.rank, feats.rank)
    degraded = feats.truncated or R < args.rank

    try:
        if args.compare:
            fast = fast_maxvol(feats, R)
            conv = conventional_maxvol(feats, R, swap_tol=args.swap_tol)
            sim = subspace_similarity(A[list(fast.indices), :].T, A[list(conv.indices), :].T)
            out = {
                "fast": _selection_json(fast),
                "conventional": _selection_json(conv),
                "row_subspace_similarity": sim,
            }
            print(json.dumps(out, indent=1))
            return 2 if (fast.truncated or degraded) else 0
        if args.method == "fast":
            sel = fast_maxvol(feats, R)
        elif args.method == "conventional":
            sel = conventional_maxvol(feats, R, swap_tol=args.swap_tol)
        else:
            sel = brute_force_maxvol(feats, R)
    except TooLarge as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except GraftError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    print(json.dumps(_selection_json(sel), indent=1))
    return 2 if (sel.truncated or degraded) else 0


_TRAIN_KEYS = {f.name for f in dataclasses.fields(TrainConfig)}
_METRIC_KEYS = {"joules_per_eval", "intensity_kg_per_kwh"}
_TOP_KEYS = {"dataset", "output_dir", "train", "metrics"}


def _load_run_config(path: str) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise SystemExit(f"error: cannot read config {path}: {exc}")
    bad = sorted(set(cfg) - _TOP_KEYS)
    bad += sorted(f"train.{k}" for k in set(cfg.get("train", {})) - _TRAIN_KEYS)
    bad += sorted(f"metrics.{k}" for k in set(cfg.get("metrics", {})) - _METRIC_KEYS)
    ds = cfg.get("dataset", {})
    if not (("builtin" in ds) ^ ("csv" in ds)):
        raise SystemExit("error: dataset must have exactly one of 'builtin' or 'csv'")
    if "builtin" in ds:
        gen = datasets.BUILTIN_GENERATORS.get(ds["builtin"])
        if gen is None:
            raise SystemExit(f"error: unknown builtin dataset {ds['builtin']!r}")
        allowed = set(inspect.signature(gen).parameters) | {"builtin"}
        bad += sorted(f"dataset.{k}" for k in set(ds) - allowed)
    else:
        bad += sorted(f"dataset.{k}" for k in set(ds) - {"csv", "test_fraction", "seed"})
    if "train" not in cfg or "dataset" not in cfg:
        raise SystemExit("error: config needs 'dataset' and 'train' sections")
    if bad:
        raise SystemExit("error: unknown config keys: " + ", ".join(bad))
    return cfg


def _build_dataset(ds: dict):
    if "csv" in ds:
        kw = {k: v for k, v in ds.items() if k != "csv"}
        return datasets.load_csv(ds["csv"], **kw)
    kw = {k: v for k, v in ds.items() if k != "builtin"}
    return datasets.BUILTIN_GENERATORS[ds["builtin"]](**kw)


def cmd_train(args) -> int:
    cfg = _load_run_config(args.config)
    tkw = dict(cfg["train"])
    if args.seed is not None:
        tkw["seed"] = args.seed
    elif os.environ.get("GRAFT_SEED"):
        tkw["seed"] = int(os.environ["GRAFT_SEED"])
    if args.parallel_batches:
        tkw["parallel_batches"] = args.parallel_batches
    if "rank_set" in tkw:
        tkw["rank_set"] = tuple(tkw["rank_set"])
    if tkw.get("epsilon") == "inf":
        tkw["epsilon"] = math.inf
    try:
        train_cfg = TrainConfig(**tkw)
    except (TypeError, ValueError) as exc:
        print(f"error: invalid train config: {exc}", file=sys.stderr)
        return 1

    data = _build_dataset(cfg["dataset"])
    trace = train(train_cfg, data)
    mk = cfg.get("metrics", {})
    jpe = mk.get("joules_per_eval", DEFAULT_JOULES_PER_EVAL)
    intensity = mk.get("intensity_kg_per_kwh", DEFAULT_INTENSITY_KG_PER_KWH)
    out_dir = cfg.get("output_dir", args.output or "graft_out")
    if args.output:
        out_dir = args.output
    export_trace(trace, out_dir, joules_per_eval=jpe, intensity=intensity)
    kg = proxy_emissions(trace.total_gradient_evaluations, jpe, intensity).kg_co2
    print(f"final_acc={trace.final_test_accuracy} "
          f"grad_evals={trace.total_gradient_evaluations} kg_co2={kg}")
    return 2 if trace.diverged else 0


def cmd_bench(args) -> int:
    rset = sorted(int(r) for r in args.rset.split(","))
    rng = np.random.default_rng(args.seed)
    writer = csv.writer(sys.stdout)
    writer.writerow(["K", "R", "mean_op_count", "mean_wall_ns"])
    mean_ops = []
    for R in rset:
        ops, wall = [], []
        for _ in range(args.trials):
            V = rng.normal(size=(args.k, R))
            t0 = time.perf_counter_ns()
            sel = fast_maxvol(V, R)
            wall.append(time.perf_counter_ns() - t0)
            ops.append(sel.elementary_op_count)
        mean_ops.append(float(np.mean(ops)))
        writer.writerow([args.k, R, mean_ops[-1], float(np.mean(wall))])
    if len(rset) >= 2:
        slope = np.polyfit(np.log(rset), np.log(mean_ops), 1)[0]
        print(f"fitted_R_exponent={slope:.4f}")
    return 0


def cmd_fit_curve(args) -> int:
    pts = []
    with open(args.input, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            print("error: empty input", file=sys.stderr)
            return 1
        for row in reader:
            if row:
                pts.append((float(row[0]), float(row[1])))
    try:
        curve = fit_gain_curve(pts)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FitFailed as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    print(json.dumps(dataclasses.asdict(curve), indent=1))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="graft", description=__doc__,
                                formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("sample", help="select rows of a matrix by maximum volume",
                        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    sp.add_argument("--input", required=True, help="CSV path, or 'iris' for the bundled table")
    sp.add_argument("--rank", type=int, required=True, help="number of rows to select")
    sp.add_argument("--method", choices=["fast", "conventional", "brute"], default="fast",
                    help="selection algorithm")
    sp.add_argument("--extractor", choices=["svd", "variance"], default="svd",
                    help="feature extractor applied before selection")
    sp.add_argument("--swap-tol", type=float, default=1.05, dest="swap_tol",
                    help="dominance threshold for the conventional method")
    sp.add_argument("--compare", action="store_true",
                    help="run fast and conventional, print both plus row-subspace similarity")
    sp.set_defaults(func=cmd_sample)

    tp = sub.add_parser("train", help="run the training harness from a JSON config",
                        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    tp.add_argument("--config", required=True, help="run configuration JSON")
    tp.add_argument("--seed", type=int, default=None,
                    help="override seed (precedence: flag > GRAFT_SEED > config)")
    tp.add_argument("--output", default=None, help="override output directory")
    tp.add_argument("--parallel-batches", type=int, default=0, dest="parallel_batches",
                    help="worker threads for subset selection (0 = config value)")
    tp.set_defaults(func=cmd_train)

    bp = sub.add_parser("bench", help="operation-count table for the fast selection kernel",
                        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    bp.add_argument("--k", type=int, default=256, help="number of rows")
    bp.add_argument("--rset", default="4,8,16,32,64", help="comma-separated ranks")
    bp.add_argument("--trials", type=int, default=3, help="repetitions per rank")
    bp.add_argument("--seed", type=int, default=0, help="RNG seed for test matrices")
    bp.set_defaults(func=cmd_bench)

    fp = sub.add_parser("fit-curve", help="fit the exponential gain curve to x,value CSV",
                        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    fp.add_argument("--input", required=True, help="CSV with header and x,value rows")
    fp.set_defaults(func=cmd_fit_curve)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SystemExit as exc:
        if isinstance(exc.code, str):
            print(exc.code, file=sys.stderr)
            return 1
        raise


if __name__ == "__main__":
    sys.exit(main())
