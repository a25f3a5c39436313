"""Loss, row-spread regularizer, Adam, and the full-batch epoch loop."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import metrics as metrics_mod
from .graph import SparseGraph
from .linalg import svd_values
from .model import ForwardTape, ModelSpec, Parameters, backward, forward, init_parameters

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


class NumericalAbortError(RuntimeError):
    def __init__(self, epoch: int, quantity: str, value: float):
        super().__init__(
            f"non-finite {quantity} ({value}) at epoch {epoch}; aborting run"
        )
        self.epoch = epoch
        self.quantity = quantity


@dataclass
class TrainConfig:
    lr: float = 1e-3
    weight_decay: float = 5e-4
    lambda_w: float = 0.0
    epochs: int = 200
    cold_start: bool = False
    metric_layers: str = "first_mid_last"  # or "all"
    metric_scopes: tuple[str, ...] = ("all_nodes", "train_nodes")
    metric_every: int = 1  # 0 disables snapshots
    greg_sign: str = "reward"  # "penalty" flips the term for ablations
    seed: int = 0

    def __post_init__(self):
        if self.lr <= 0.0:
            raise ValueError("lr must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.metric_layers not in ("first_mid_last", "all"):
            raise ValueError(f"unknown metric_layers {self.metric_layers!r}")
        if self.greg_sign not in ("reward", "penalty"):
            raise ValueError(f"unknown greg_sign {self.greg_sign!r}")
        for scope in self.metric_scopes:
            if scope not in ("all_nodes", "train_nodes"):
                raise ValueError(f"unknown metric scope {scope!r}")


@dataclass(frozen=True)
class MetricRecord:
    epoch: int
    layer: str  # layer index as string, or "output" for the logits layer
    scope: str
    metric: str
    value: float


@dataclass
class EpochStats:
    epoch: int
    loss_total: float
    loss_ce: float
    greg_value: float
    decay_value: float
    train_acc: float
    val_acc: float
    test_acc: float


@dataclass
class TrainResult:
    params: Parameters
    records: list[MetricRecord]
    history: list[EpochStats]
    spec: ModelSpec
    config: TrainConfig


def cross_entropy_loss(
    logits: np.ndarray, labels: Sequence[int], mask: Sequence[bool]
) -> tuple[float, np.ndarray]:
    """Mean masked cross entropy with its logits gradient.

    Stabilized by row-max subtraction; the gradient is zero outside the mask.
    """
    logits = np.ascontiguousarray(logits, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    mask = np.asarray(mask, dtype=bool)
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        raise ValueError("cross_entropy_loss needs a nonempty mask")
    sel = logits[idx]
    y = labels[idx]
    if np.any(y < 0) or np.any(y >= logits.shape[1]):
        raise ValueError("labels out of range on masked nodes")
    shifted = sel - sel.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    denom = exp.sum(axis=1)
    log_probs = shifted - np.log(denom)[:, None]
    loss = float(-log_probs[np.arange(idx.size), y].mean())
    probs = exp / denom[:, None]
    probs[np.arange(idx.size), y] -= 1.0
    dlogits = np.zeros_like(logits)
    dlogits[idx] = probs / idx.size
    return loss, dlogits


def greg_term(p: Parameters) -> tuple[float, Parameters]:
    """Mean per-row standard deviation of each weight matrix, with gradients.

    Population std over each row; rows with zero spread contribute zero
    value and zero gradient. The input projection is left out: the term
    targets the square weight chain whose singular values bound MASED.
    """
    value = 0.0
    grads = []
    for w in p.weights:
        rows, cols = w.shape
        mu = w.mean(axis=1, keepdims=True)
        centered = w - mu
        std = np.sqrt((centered**2).mean(axis=1))
        value += float(std.sum()) / rows
        g = np.zeros_like(w)
        nz = std > 0.0
        g[nz] = centered[nz] / (rows * cols * std[nz, None])
        grads.append(g)
    grad_proj = None
    if p.input_projection is not None:
        grad_proj = np.zeros_like(p.input_projection)
    return value, Parameters(weights=grads, input_projection=grad_proj)


def apply_cold_start(g: SparseGraph) -> SparseGraph:
    """Zero the feature rows of every node outside the training set."""
    features = g.features.copy()
    features[~g.train_mask] = 0.0
    return g.with_features(features)


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0

    @classmethod
    def for_params(cls, p: Parameters) -> "AdamState":
        mats = p.all_matrices()
        return cls(
            m=[np.zeros_like(w) for w in mats],
            v=[np.zeros_like(w) for w in mats],
        )


def adam_step(
    p: Parameters,
    grads: Parameters,
    state: AdamState,
    lr: float,
    weight_decay: float,
) -> None:
    """One Adam update in place; L2 decay is added to the raw gradient."""
    state.t += 1
    t = state.t
    params = p.all_matrices()
    gs = grads.all_matrices()
    if len(params) != len(gs):
        raise ValueError("parameter/gradient structure mismatch")
    bias1 = 1.0 - ADAM_BETA1**t
    bias2 = 1.0 - ADAM_BETA2**t
    for w, g, m, v in zip(params, gs, state.m, state.v):
        if w.shape != g.shape:
            raise ValueError(f"gradient shape {g.shape} != parameter shape {w.shape}")
        g = g + weight_decay * w
        m *= ADAM_BETA1
        m += (1.0 - ADAM_BETA1) * g
        v *= ADAM_BETA2
        v += (1.0 - ADAM_BETA2) * g * g
        w -= lr * (m / bias1) / (np.sqrt(v / bias2) + ADAM_EPS)


def _accuracy(logits: np.ndarray, labels: np.ndarray, mask: np.ndarray) -> float:
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        return float("nan")
    pred = np.argmax(logits[idx], axis=1)
    return float((pred == labels[idx]).mean())


def snapshot_layers(num_layers: int, cadence: str) -> list[int]:
    """1-indexed layers to snapshot; middle = ceil(K/2)."""
    if cadence == "all":
        return list(range(1, num_layers + 1))
    picks = {1, (num_layers + 1) // 2, num_layers}
    return sorted(picks)


def _scope_mask(g: SparseGraph, scope: str) -> np.ndarray:
    if scope == "train_nodes":
        return g.train_mask
    return np.ones(g.n, dtype=bool)


def collect_metrics(
    g: SparseGraph,
    tape: ForwardTape,
    p: Parameters,
    cfg: TrainConfig,
    epoch: int,
) -> list[MetricRecord]:
    records: list[MetricRecord] = []
    num_layers = len(p.weights)
    for layer in snapshot_layers(num_layers, cfg.metric_layers):
        i = layer - 1
        out = tape.post_activation[i]
        label = "output" if layer == num_layers else str(layer)
        sv = svd_values(p.weights[i])
        records.append(MetricRecord(epoch, label, "model", "sigma_max_w", sv.sigma_max))
        records.append(MetricRecord(epoch, label, "model", "sigma_min_w", sv.sigma_min))
        for scope in cfg.metric_scopes:
            mask = _scope_mask(g, scope)
            h_hat = tape.h_hat[i][mask]
            h_out = out[mask]
            mased = metrics_mod.compute_mased(h_out)
            try:
                eps = metrics_mod.spectral_alignment_epsilon(h_out)
            except metrics_mod.DegenerateEmbeddingsError:
                eps = 0.0
            row_norms = np.linalg.norm(h_hat, axis=1)
            sigma_min_map = metrics_mod.map_sigma_min(p.weights[i], sv)
            lower = 2.0 * eps * sigma_min_map**2 * float(row_norms.min()) ** 2
            upper = 2.0 * sv.sigma_max**2 * float(row_norms.max()) ** 2
            mean_norm, min_norm, max_norm = metrics_mod.embedding_norm_stats(
                out, mask
            )
            pairs = [
                ("mased", mased),
                ("epsilon", eps),
                ("bound_lower", lower),
                ("bound_upper", upper),
                ("embedding_norm_mean", mean_norm),
                ("embedding_norm_min", min_norm),
                ("embedding_norm_max", max_norm),
            ]
            try:
                angle, skipped = metrics_mod.centroid_angles(out, g.labels, mask)
                pairs.append(("centroid_angle_mean", angle))
                pairs.append(("centroid_pairs_skipped", float(skipped)))
            except ValueError:
                pass
            for name, value in pairs:
                records.append(MetricRecord(epoch, label, scope, name, value))
    return records


def train_model(g: SparseGraph, spec: ModelSpec, cfg: TrainConfig) -> TrainResult:
    if cfg.cold_start:
        g = apply_cold_start(g)
    p = init_parameters(spec)
    state = AdamState.for_params(p)
    x = g.features
    records: list[MetricRecord] = []
    history: list[EpochStats] = []
    greg_factor = -1.0 if cfg.greg_sign == "reward" else 1.0
    for epoch in range(1, cfg.epochs + 1):
        tape = forward(g, x, p, spec)
        loss_ce, dlogits = cross_entropy_loss(tape.logits, g.labels, g.train_mask)
        greg_value, greg_grads = greg_term(p)
        decay_value = 0.5 * cfg.weight_decay * sum(
            float((w**2).sum()) for w in p.all_matrices()
        )
        total = loss_ce + greg_factor * cfg.lambda_w * greg_value + decay_value
        if not math.isfinite(total):
            for name, q in (
                ("cross_entropy", loss_ce),
                ("greg", greg_value),
                ("decay", decay_value),
            ):
                if not math.isfinite(q):
                    raise NumericalAbortError(epoch, name, q)
            raise NumericalAbortError(epoch, "total_loss", total)

        history.append(
            EpochStats(
                epoch=epoch,
                loss_total=total,
                loss_ce=loss_ce,
                greg_value=greg_value,
                decay_value=decay_value,
                train_acc=_accuracy(tape.logits, g.labels, g.train_mask),
                val_acc=_accuracy(tape.logits, g.labels, g.val_mask),
                test_acc=_accuracy(tape.logits, g.labels, g.test_mask),
            )
        )
        if cfg.metric_every and epoch % cfg.metric_every == 0:
            records.extend(collect_metrics(g, tape, p, cfg, epoch))

        grads = backward(tape, g, p, x, dlogits)
        if cfg.lambda_w != 0.0:
            for gw, rw in zip(grads.weights, greg_grads.weights):
                gw += greg_factor * cfg.lambda_w * rw
        adam_step(p, grads, state, cfg.lr, cfg.weight_decay)
    return TrainResult(params=p, records=records, history=history, spec=spec, config=cfg)
