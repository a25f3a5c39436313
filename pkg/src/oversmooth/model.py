"""Forward/backward passes for GCN, residual GCN, and stacked-SGC models.

All three families share one block structure: aggregate with some power of
the normalized adjacency, multiply by a weight matrix, apply ReLU except at
the output. The plain GCN is the stacked model with one hop per block, which
makes the two forwards bitwise identical by construction. Reverse mode is
hand-rolled over the recorded tape; adjacency symmetry stands in for the
transpose in the aggregation backward.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .graph import SparseGraph, spmm_power

FAMILIES = ("gcn", "resgcn", "sgc_stack")


@dataclass
class ModelSpec:
    family: str
    depth_hops: int
    num_classes: int
    input_dim: int
    num_weight_layers: int | None = None  # defaults to depth_hops
    width: int = 128
    init: str = "glorot_uniform"
    init_std: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}, expected one of {FAMILIES}")
        if self.num_weight_layers is None:
            self.num_weight_layers = self.depth_hops
        if not 1 <= self.num_weight_layers <= self.depth_hops:
            raise ValueError(
                f"need 1 <= weight layers <= hops, got K={self.num_weight_layers}, "
                f"L={self.depth_hops}"
            )
        if self.family in ("gcn", "resgcn") and self.num_weight_layers != self.depth_hops:
            raise ValueError(f"{self.family} requires one weight matrix per hop")
        if self.width <= 0:
            raise ValueError("width must be positive")
        if self.init not in ("glorot_uniform", "gaussian"):
            raise ValueError(f"unknown init {self.init!r}")


@dataclass
class Parameters:
    weights: list[np.ndarray]
    input_projection: np.ndarray | None = None

    def copy(self) -> "Parameters":
        return Parameters(
            weights=[w.copy() for w in self.weights],
            input_projection=None
            if self.input_projection is None
            else self.input_projection.copy(),
        )

    def all_matrices(self) -> list[np.ndarray]:
        mats = list(self.weights)
        if self.input_projection is not None:
            mats.append(self.input_projection)
        return mats


@dataclass
class ForwardTape:
    family: str
    hops: list[int]
    h_hat: list[np.ndarray] = field(default_factory=list)
    pre_activation: list[np.ndarray] = field(default_factory=list)
    post_activation: list[np.ndarray] = field(default_factory=list)
    h0: np.ndarray | None = None  # projected input (resgcn)

    @property
    def logits(self) -> np.ndarray:
        return self.pre_activation[-1]


def hop_split(total_hops: int, num_blocks: int) -> list[int]:
    """Distribute hops over blocks as evenly as possible, extras first."""
    if not 1 <= num_blocks <= total_hops:
        raise ValueError(f"need 1 <= K <= L, got K={num_blocks}, L={total_hops}")
    base, extra = divmod(total_hops, num_blocks)
    return [base + 1] * extra + [base] * (num_blocks - extra)


def _layer_dims(spec: ModelSpec) -> list[tuple[int, int]]:
    k = spec.num_weight_layers
    first_in = spec.width if spec.family == "resgcn" else spec.input_dim
    dims = []
    for i in range(k):
        rows = first_in if i == 0 else spec.width
        cols = spec.num_classes if i == k - 1 else spec.width
        dims.append((rows, cols))
    return dims


def init_parameters(spec: ModelSpec) -> Parameters:
    rng = np.random.default_rng(spec.seed)

    def draw(rows: int, cols: int) -> np.ndarray:
        if spec.init == "glorot_uniform":
            limit = np.sqrt(6.0 / (rows + cols))
            return rng.uniform(-limit, limit, size=(rows, cols))
        return rng.normal(0.0, spec.init_std, size=(rows, cols))

    projection = None
    if spec.family == "resgcn":
        projection = draw(spec.input_dim, spec.width)
    weights = [draw(r, c) for r, c in _layer_dims(spec)]
    return Parameters(weights=weights, input_projection=projection)


def _forward_blocks(
    g: SparseGraph, x: np.ndarray, p: Parameters, hops: Sequence[int], family: str
) -> ForwardTape:
    tape = ForwardTape(family=family, hops=list(hops))
    last = len(p.weights) - 1
    h = np.ascontiguousarray(x, dtype=np.float64)
    for k, (w, hop) in enumerate(zip(p.weights, hops)):
        h_hat = spmm_power(g, h, hop)
        if h_hat.shape[1] != w.shape[0]:
            raise ValueError(
                f"layer {k}: aggregated width {h_hat.shape[1]} != weight rows {w.shape[0]}"
            )
        pre = h_hat @ w
        post = pre if k == last else np.maximum(pre, 0.0)
        tape.h_hat.append(h_hat)
        tape.pre_activation.append(pre)
        tape.post_activation.append(post)
        h = post
    return tape


def forward_gcn(g: SparseGraph, x: np.ndarray, p: Parameters) -> ForwardTape:
    return _forward_blocks(g, x, p, [1] * len(p.weights), "gcn")


def forward_sgc_stack(
    g: SparseGraph, x: np.ndarray, p: Parameters, spec: ModelSpec
) -> ForwardTape:
    hops = hop_split(spec.depth_hops, len(p.weights))
    return _forward_blocks(g, x, p, hops, "sgc_stack")


def forward_resgcn(g: SparseGraph, x: np.ndarray, p: Parameters) -> ForwardTape:
    if p.input_projection is None:
        raise ValueError("resgcn parameters need an input projection")
    x = np.ascontiguousarray(x, dtype=np.float64)
    h0 = x @ p.input_projection
    tape = ForwardTape(family="resgcn", hops=[1] * len(p.weights), h0=h0)
    last = len(p.weights) - 1
    h = h0
    for k, w in enumerate(p.weights):
        h_hat = spmm_power(g, h, 1)
        pre = h_hat @ w
        if k < last:
            pre = pre + h0
            post = np.maximum(pre, 0.0)
        else:
            post = pre
        tape.h_hat.append(h_hat)
        tape.pre_activation.append(pre)
        tape.post_activation.append(post)
        h = post
    return tape


def forward(g: SparseGraph, x: np.ndarray, p: Parameters, spec: ModelSpec) -> ForwardTape:
    if spec.family == "gcn":
        return forward_gcn(g, x, p)
    if spec.family == "resgcn":
        return forward_resgcn(g, x, p)
    return forward_sgc_stack(g, x, p, spec)


def backward(
    tape: ForwardTape, g: SparseGraph, p: Parameters, x: np.ndarray, dlogits: np.ndarray
) -> Parameters:
    """Exact gradients of every weight matrix for the given output gradient.

    ReLU's derivative at 0 is taken as 0 (the mask is post_activation > 0).
    """
    num_layers = len(p.weights)
    if len(tape.pre_activation) != num_layers:
        raise ValueError(
            f"tape has {len(tape.pre_activation)} layers, parameters have {num_layers}"
        )
    grad_w: list[np.ndarray | None] = [None] * num_layers
    d_h0 = None
    d_post = np.ascontiguousarray(dlogits, dtype=np.float64)
    for k in reversed(range(num_layers)):
        if k == num_layers - 1:
            d_pre = d_post
        else:
            d_pre = d_post * (tape.post_activation[k] > 0.0)
        grad_w[k] = tape.h_hat[k].T @ d_pre
        if tape.family == "resgcn" and k < num_layers - 1:
            d_h0 = d_pre if d_h0 is None else d_h0 + d_pre
        d_h_hat = d_pre @ p.weights[k].T
        d_post = spmm_power(g, d_h_hat, tape.hops[k])
    grad_proj = None
    if tape.family == "resgcn":
        d_h0 = d_post if d_h0 is None else d_h0 + d_post
        x = np.ascontiguousarray(x, dtype=np.float64)
        grad_proj = x.T @ d_h0
    return Parameters(weights=list(grad_w), input_projection=grad_proj)
