"""Experiment runner: train / sweep / inspect / gen / stats subcommands.

Configs are JSON files; command-line flags only override scalar fields.
Every run writes metrics.csv (the metric record stream), summary.json, and
a params.ckpt checkpoint directory.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .data import (
    DatasetError,
    SbmSpec,
    dataset_stats,
    generate_sbm,
    generate_sbm_payload,
    load_dataset,
    save_dataset,
)
from .graph import SparseGraph
from .linalg import svd_values
from .metrics import survival_probability
from .model import ModelSpec, Parameters
from .train import (
    MetricRecord,
    NumericalAbortError,
    TrainConfig,
    TrainResult,
    greg_term,
    train_model,
)

FLOAT_FMT = "%.17g"

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATASET = 2
EXIT_NUMERICAL = 3

log = logging.getLogger("oversmooth")


class ConfigError(ValueError):
    pass


def _setup_logging() -> None:
    level = os.environ.get("OVERSMOOTH_LOG", "info").lower()
    levels = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    if level not in levels:
        level = "info"
    logging.basicConfig(level=levels[level], format="%(levelname)s %(message)s")


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def _resolve_graph(config: dict) -> SparseGraph:
    if ("dataset" in config) == ("sbm" in config):
        raise ConfigError("config must contain exactly one of 'dataset' or 'sbm'")
    if "dataset" in config:
        g = load_dataset(config["dataset"])
    else:
        g = generate_sbm(SbmSpec(**config["sbm"]))
    if config.get("row_normalize", False):
        norms = np.linalg.norm(g.features, axis=1, keepdims=True)
        norms[norms == 0.0] = 1.0
        g = g.with_features(g.features / norms)
    return g


def _build_spec(config: dict, g: SparseGraph, seed_override: int | None) -> ModelSpec:
    model_cfg = dict(config.get("model", {}))
    if "family" not in model_cfg or "depth_hops" not in model_cfg:
        raise ConfigError("model config needs 'family' and 'depth_hops'")
    model_cfg.setdefault("num_classes", g.num_classes())
    model_cfg.setdefault("input_dim", g.features.shape[1])
    if seed_override is not None:
        model_cfg["seed"] = seed_override
    try:
        return ModelSpec(**model_cfg)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid model config: {exc}") from exc


def _build_train_config(config: dict) -> TrainConfig:
    train_cfg = dict(config.get("train", {}))
    if "metric_scopes" in train_cfg:
        train_cfg["metric_scopes"] = tuple(train_cfg["metric_scopes"])
    try:
        return TrainConfig(**train_cfg)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid train config: {exc}") from exc


def write_metrics_csv(records: list[MetricRecord], path: Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["epoch", "layer", "scope", "metric", "value"])
        for r in records:
            writer.writerow([r.epoch, r.layer, r.scope, r.metric, FLOAT_FMT % r.value])


def save_checkpoint(params: Parameters, spec: ModelSpec, epoch: int, path: Path) -> None:
    path.mkdir(parents=True, exist_ok=True)
    manifest = {
        "family": spec.family,
        "seed": spec.seed,
        "epoch": epoch,
        "weight_shapes": [list(w.shape) for w in params.weights],
        "has_projection": params.input_projection is not None,
    }
    (path / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")

    def dump(matrix: np.ndarray, name: str) -> None:
        with open(path / name, "w") as fh:
            for row in matrix:
                fh.write(" ".join(FLOAT_FMT % v for v in row) + "\n")

    for i, w in enumerate(params.weights):
        dump(w, f"weight_{i:02d}.txt")
    if params.input_projection is not None:
        dump(params.input_projection, "projection.txt")


def load_checkpoint(path: str | Path) -> tuple[Parameters, dict]:
    path = Path(path)
    manifest_path = path / "manifest.json"
    if not manifest_path.is_file():
        raise DatasetError(f"missing checkpoint manifest: {manifest_path}")
    try:
        manifest = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        raise DatasetError(f"corrupt checkpoint manifest: {exc}") from exc

    def read(name: str, shape: list[int]) -> np.ndarray:
        file = path / name
        if not file.is_file():
            raise DatasetError(f"missing checkpoint matrix: {file}")
        rows = [
            [float(v) for v in line.split()]
            for line in file.read_text().splitlines()
            if line.strip()
        ]
        m = np.array(rows, dtype=np.float64)
        if list(m.shape) != list(shape):
            raise DatasetError(
                f"checkpoint matrix {name} has shape {list(m.shape)}, expected {shape}"
            )
        return m

    try:
        weights = [
            read(f"weight_{i:02d}.txt", shape)
            for i, shape in enumerate(manifest["weight_shapes"])
        ]
    except (KeyError, ValueError) as exc:
        raise DatasetError(f"corrupt checkpoint: {exc}") from exc
    projection = None
    if manifest.get("has_projection"):
        proj_file = path / "projection.txt"
        if not proj_file.is_file():
            raise DatasetError(f"missing checkpoint matrix: {proj_file}")
        rows = [
            [float(v) for v in line.split()]
            for line in proj_file.read_text().splitlines()
            if line.strip()
        ]
        projection = np.array(rows, dtype=np.float64)
    return Parameters(weights=weights, input_projection=projection), manifest


def summarize_run(result: TrainResult, wall_time: float, metrics_path: str) -> dict:
    best = max(result.history, key=lambda h: (h.val_acc, -h.epoch))
    return {
        "model": asdict(result.spec),
        "train": asdict(result.config),
        "best_val_accuracy": best.val_acc,
        "test_accuracy_at_best_val": best.test_acc,
        "best_val_epoch": best.epoch,
        "final_train_accuracy": result.history[-1].train_acc,
        "final_val_accuracy": result.history[-1].val_acc,
        "final_test_accuracy": result.history[-1].test_acc,
        "final_singular_values": [
            svd_values(w).all_singular_values.tolist() for w in result.params.weights
        ],
        "wall_time_seconds": wall_time,
        "metrics_path": metrics_path,
        "history": [asdict(h) for h in result.history],
    }


def run_single(config: dict, out_dir: Path, seed_override: int | None = None) -> dict:
    g = _resolve_graph(config)
    spec = _build_spec(config, g, seed_override)
    cfg = _build_train_config(config)
    start = time.perf_counter()
    result = train_model(g, spec, cfg)
    wall = time.perf_counter() - start
    out_dir.mkdir(parents=True, exist_ok=True)
    metrics_path = out_dir / "metrics.csv"
    write_metrics_csv(result.records, metrics_path)
    summary = summarize_run(result, wall, str(metrics_path))
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    save_checkpoint(result.params, spec, cfg.epochs, out_dir / "params.ckpt")
    return summary


def cmd_train(args) -> int:
    try:
        config = _load_config(args.config)
        out_dir = Path(args.out or config.get("out", "run_out"))
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    try:
        summary = run_single(config, out_dir, args.seed)
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    except DatasetError as exc:
        log.error("dataset error: %s", exc)
        return EXIT_DATASET
    except NumericalAbortError as exc:
        log.error("numerical abort: %s", exc)
        return EXIT_NUMERICAL
    log.info(
        "best val %.4f, test@best %.4f",
        summary["best_val_accuracy"],
        summary["test_accuracy_at_best_val"],
    )
    return EXIT_OK


def _sweep_cell(task: dict) -> dict:
    """One sweep cell: `repeats` runs of a single configuration."""
    config = task["config"]
    cell_dir = Path(task["cell_dir"])
    vals, tests = [], []
    failures = []
    for rep in range(task["repeats"]):
        seed = task["base_seed"] + (rep if task["seed_mode"] == "increment" else 0)
        try:
            summary = run_single(config, cell_dir / f"rep_{rep}", seed_override=seed)
            vals.append(summary["best_val_accuracy"])
            tests.append(summary["test_accuracy_at_best_val"])
        except (ConfigError, DatasetError, NumericalAbortError) as exc:
            failures.append(f"rep {rep}: {exc}")
    out = dict(task["cell_key"])
    out["repeats_ok"] = len(vals)
    out["failures"] = failures
    if vals:
        out["val_acc_mean"] = float(np.mean(vals))
        out["val_acc_std"] = float(np.std(vals))
        out["test_acc_mean"] = float(np.mean(tests))
        out["test_acc_std"] = float(np.std(tests))
    return out


def cmd_sweep(args) -> int:
    try:
        config = _load_config(args.config)
        grid = config.get("grid")
        if not isinstance(grid, dict):
            raise ConfigError("sweep config needs a 'grid' object")
        out_dir = Path(args.out or config.get("out", "sweep_out"))
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG

    depths = grid.get("depth_hops", [config.get("model", {}).get("depth_hops")])
    lambdas = grid.get("lambda_w", [config.get("train", {}).get("lambda_w", 0.0)])
    ks = grid.get("num_weight_layers", [None])
    repeats = int(config.get("repeats", 1))
    seed_mode = config.get("seed_mode", "increment")
    base_seed = args.seed if args.seed is not None else config.get("model", {}).get("seed", 0)

    tasks = []
    for depth in depths:
        for lam in lambdas:
            for k in ks:
                cell_config = json.loads(json.dumps(config))  # deep copy
                cell_config.pop("grid", None)
                cell_config.setdefault("model", {})["depth_hops"] = depth
                if k is not None:
                    cell_config["model"]["num_weight_layers"] = k
                cell_config.setdefault("train", {})["lambda_w"] = lam
                key = {"depth_hops": depth, "lambda_w": lam, "num_weight_layers": k}
                cell_name = f"d{depth}_l{lam}" + (f"_k{k}" if k is not None else "")
                tasks.append(
                    {
                        "config": cell_config,
                        "cell_dir": str(out_dir / "cells" / cell_name),
                        "cell_key": key,
                        "repeats": repeats,
                        "seed_mode": seed_mode,
                        "base_seed": base_seed,
                    }
                )

    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_sweep_cell, tasks))
    else:
        rows = [_sweep_cell(t) for t in tasks]

    out_dir.mkdir(parents=True, exist_ok=True)
    columns = [
        "depth_hops",
        "lambda_w",
        "num_weight_layers",
        "repeats_ok",
        "val_acc_mean",
        "val_acc_std",
        "test_acc_mean",
        "test_acc_std",
    ]
    with open(out_dir / "sweep.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([row.get(c, "") for c in columns])

    # Table-style report: best depth per (lambda_w, K) cell, chosen on validation.
    best: dict[str, dict] = {}
    for row in rows:
        if "val_acc_mean" not in row:
            continue
        key = f"lambda={row['lambda_w']},K={row['num_weight_layers']}"
        if key not in best or row["val_acc_mean"] > best[key]["val_acc_mean"]:
            best[key] = row
    (out_dir / "sweep_summary.json").write_text(
        json.dumps({"best_by_validation": best, "failed_cells": [
            r for r in rows if r.get("failures")
        ]}, indent=2) + "\n"
    )
    log.info("sweep complete: %d cells", len(rows))
    return EXIT_OK


def cmd_inspect(args) -> int:
    try:
        params, manifest = load_checkpoint(args.checkpoint)
    except DatasetError as exc:
        log.error("%s", exc)
        return EXIT_DATASET
    print(f"family={manifest['family']} seed={manifest['seed']} epoch={manifest['epoch']}")
    for i, w in enumerate(params.weights):
        sv = svd_values(w)
        cond = sv.sigma_max / sv.sigma_min if sv.sigma_min > 0 else float("inf")
        print(
            f"layer {i + 1}: shape {w.shape[0]}x{w.shape[1]} "
            f"sigma_max={sv.sigma_max:.6g} sigma_min={sv.sigma_min:.6g} cond={cond:.6g}"
        )
    per_layer_k, prob = survival_probability(params.weights, args.threshold)
    print(f"survival: per-layer k {per_layer_k}, probability {prob:.6g}")
    value, _ = greg_term(params)
    print(f"row-spread regularizer value: {value:.6g}")
    return EXIT_OK


def cmd_gen(args) -> int:
    try:
        config = _load_config(args.config)
        spec = SbmSpec(**config)
    except (ConfigError, TypeError, ValueError) as exc:
        log.error("invalid generator spec: %s", exc)
        return EXIT_CONFIG
    payload = generate_sbm_payload(spec)
    save_dataset(payload, args.out_dir)
    log.info("wrote dataset %s to %s", payload.name, args.out_dir)
    return EXIT_OK


def cmd_stats(args) -> int:
    try:
        g = load_dataset(args.dataset)
    except DatasetError as exc:
        log.error("%s", exc)
        return EXIT_DATASET
    print(json.dumps(dataset_stats(g), indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="oversmooth")
    parser.add_argument("--jobs", type=int, default=1, help="sweep worker pool size")
    parser.add_argument("--seed", type=int, default=None, help="override model seed")
    parser.add_argument("--out", default=None, help="override output directory")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="run one training configuration")
    p.add_argument("config")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sweep", help="run a depth/lambda/K grid")
    p.add_argument("config")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("inspect", help="report spectra of a checkpoint")
    p.add_argument("checkpoint")
    p.add_argument("--threshold", type=float, default=0.5)
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("gen", help="generate a synthetic dataset directory")
    p.add_argument("config")
    p.add_argument("out_dir")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("stats", help="print dataset statistics")
    p.add_argument("dataset")
    p.set_defaults(func=cmd_stats)
    return parser


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
