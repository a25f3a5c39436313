"""Dataset directory I/O and the synthetic block-model generator.

On-disk layout (plain text, LF endings):
  manifest.json  {name, n, num_features, num_classes, files{...}}
  edges.tsv      src<TAB>dst[<TAB>weight], 0-indexed, undirected
  features.csv   n rows of comma-separated decimals
  labels.txt     n integers, -1 for unknown
  masks.txt      n lines of train|val|test|none
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .graph import SparseGraph, build_graph

FLOAT_FMT = "%.17g"


class DatasetError(ValueError):
    """Malformed or inconsistent dataset directory."""


@dataclass
class DatasetPayload:
    """Raw file-level content of a dataset, prior to normalization."""

    name: str
    n: int
    edges: list[tuple[int, int]]
    weights: list[float] | None
    features: np.ndarray
    labels: np.ndarray
    mask_kinds: list[str]  # per node: train|val|test|none

    def masks(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        kinds = np.array(self.mask_kinds)
        return kinds == "train", kinds == "val", kinds == "test"

    def to_graph(self) -> SparseGraph:
        train, val, test = self.masks()
        return build_graph(
            self.edges,
            self.n,
            self.features,
            self.labels,
            train,
            val,
            test,
            self.weights,
        )


@dataclass
class SbmSpec:
    num_classes: int
    nodes_per_class: int
    p_in: float
    p_out: float
    feature_dim: int
    mean_separation: float = 2.0
    feature_std: float = 1.0
    train_per_class: int = 20
    val_per_class: int = 20
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.p_out <= self.p_in <= 1.0:
            raise ValueError(
                f"need 0 <= p_out <= p_in <= 1, got p_in={self.p_in}, p_out={self.p_out}"
            )
        if self.train_per_class + self.val_per_class > self.nodes_per_class:
            raise ValueError("train + val per class exceed nodes per class")
        if self.feature_dim < self.num_classes:
            raise ValueError(
                "feature_dim must be >= num_classes for the simplex means"
            )


def generate_sbm_payload(spec: SbmSpec) -> DatasetPayload:
    rng = np.random.default_rng(spec.seed)
    n = spec.num_classes * spec.nodes_per_class
    labels = np.repeat(np.arange(spec.num_classes), spec.nodes_per_class)

    # Class means on orthogonal axes scaled so pairwise distance is exact.
    means = np.zeros((spec.num_classes, spec.feature_dim))
    scale = spec.mean_separation / np.sqrt(2.0)
    for c in range(spec.num_classes):
        means[c, c] = scale
    features = means[labels] + rng.normal(0.0, spec.feature_std, size=(n, spec.feature_dim))

    iu, ju = np.triu_indices(n, k=1)
    same = labels[iu] == labels[ju]
    prob = np.where(same, spec.p_in, spec.p_out)
    keep = rng.random(iu.shape[0]) < prob
    edges = list(zip(iu[keep].tolist(), ju[keep].tolist()))

    mask_kinds = []
    for c in range(spec.num_classes):
        for i in range(spec.nodes_per_class):
            if i < spec.train_per_class:
                mask_kinds.append("train")
            elif i < spec.train_per_class + spec.val_per_class:
                mask_kinds.append("val")
            else:
                mask_kinds.append("test")
    return DatasetPayload(
        name=f"sbm-c{spec.num_classes}x{spec.nodes_per_class}-s{spec.seed}",
        n=n,
        edges=edges,
        weights=None,
        features=features,
        labels=labels,
        mask_kinds=mask_kinds,
    )


def generate_sbm(spec: SbmSpec) -> SparseGraph:
    return generate_sbm_payload(spec).to_graph()


def save_dataset(payload: DatasetPayload, directory: str | Path) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    manifest = {
        "name": payload.name,
        "n": payload.n,
        "num_features": int(payload.features.shape[1]),
        "num_classes": int(payload.labels.max()) + 1,
        "files": {
            "edges": "edges.tsv",
            "features": "features.csv",
            "labels": "labels.txt",
            "masks": "masks.txt",
        },
    }
    (directory / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    )
    with open(directory / "edges.tsv", "w") as fh:
        for k, (s, d) in enumerate(payload.edges):
            if payload.weights is None:
                fh.write(f"{s}\t{d}\n")
            else:
                fh.write(f"{s}\t{d}\t{FLOAT_FMT % payload.weights[k]}\n")
    with open(directory / "features.csv", "w") as fh:
        for row in payload.features:
            fh.write(",".join(FLOAT_FMT % v for v in row) + "\n")
    with open(directory / "labels.txt", "w") as fh:
        for lab in payload.labels:
            fh.write(f"{int(lab)}\n")
    with open(directory / "masks.txt", "w") as fh:
        for kind in payload.mask_kinds:
            fh.write(kind + "\n")


def _read_lines(path: Path) -> list[str]:
    if not path.is_file():
        raise DatasetError(f"missing dataset file: {path}")
    return path.read_text().splitlines()


def load_payload(directory: str | Path) -> DatasetPayload:
    directory = Path(directory)
    manifest_path = directory / "manifest.json"
    if not manifest_path.is_file():
        raise DatasetError(f"missing manifest.json in {directory}")
    try:
        manifest = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        raise DatasetError(f"unparsable manifest.json: {exc}") from exc
    for key in ("name", "n", "num_features", "num_classes", "files"):
        if key not in manifest:
            raise DatasetError(f"manifest.json missing field {key!r}")
    files = manifest["files"]
    n = int(manifest["n"])
    num_features = int(manifest["num_features"])
    num_classes = int(manifest["num_classes"])

    edges: list[tuple[int, int]] = []
    weights: list[float] = []
    weighted = False
    for line_no, line in enumerate(_read_lines(directory / files["edges"]), 1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) not in (2, 3):
            raise DatasetError(f"edges.tsv line {line_no}: expected 2 or 3 fields")
        s, d = int(parts[0]), int(parts[1])
        w = float(parts[2]) if len(parts) == 3 else 1.0
        if len(parts) == 3:
            weighted = True
        edges.append((s, d))
        weights.append(w)

    feature_lines = _read_lines(directory / files["features"])
    if len(feature_lines) != n:
        raise DatasetError(
            f"features.csv has {len(feature_lines)} rows, manifest says n={n}"
        )
    features = np.empty((n, num_features), dtype=np.float64)
    for i, line in enumerate(feature_lines):
        vals = line.split(",")
        if len(vals) != num_features:
            raise DatasetError(
                f"features.csv row {i}: {len(vals)} values, expected {num_features}"
            )
        features[i] = [float(v) for v in vals]

    label_lines = _read_lines(directory / files["labels"])
    if len(label_lines) != n:
        raise DatasetError(f"labels.txt has {len(label_lines)} rows, expected {n}")
    labels = np.array([int(v) for v in label_lines], dtype=np.int64)
    bad = (labels < -1) | (labels >= num_classes)
    if np.any(bad):
        raise DatasetError(
            f"labels out of range [0, {num_classes}) at rows {np.flatnonzero(bad)[:5].tolist()}"
        )

    mask_lines = _read_lines(directory / files["masks"])
    if len(mask_lines) != n:
        raise DatasetError(f"masks.txt has {len(mask_lines)} rows, expected {n}")
    for i, kind in enumerate(mask_lines):
        if kind not in ("train", "val", "test", "none"):
            raise DatasetError(f"masks.txt row {i}: unknown mask kind {kind!r}")

    return DatasetPayload(
        name=str(manifest["name"]),
        n=n,
        edges=edges,
        weights=weights if weighted else None,
        features=features,
        labels=labels,
        mask_kinds=mask_lines,
    )


def load_dataset(directory: str | Path) -> SparseGraph:
    return load_payload(directory).to_graph()


def dataset_stats(g: SparseGraph) -> dict:
    off_diagonal = 0
    for i in range(g.n):
        s, e = g.csr_offsets[i], g.csr_offsets[i + 1]
        off_diagonal += int(np.sum(g.csr_cols[s:e] != i))
    return {
        "nodes": g.n,
        "edges_undirected": off_diagonal // 2,
        "edge_entries": off_diagonal,
        "classes": g.num_classes(),
        "features": int(g.features.shape[1]),
        "train_nodes": int(g.train_mask.sum()),
        "val_nodes": int(g.val_mask.sum()),
        "test_nodes": int(g.test_mask.sum()),
    }
