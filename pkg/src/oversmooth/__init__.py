"""Oversmoothing laboratory for graph neural networks.

From-scratch training of GCN / residual-GCN / stacked-SGC node classifiers
with mean-squared-pairwise-distance diagnostics, per-layer and network-level
spectral bounds, and a row-spread weight regularizer.
"""

from .backend import backend_name
from .graph import SparseGraph, build_graph, normalize_adjacency, spmm, spmm_power
from .linalg import SvdSummary, matmul, min_singular_sparse, spectral_norm_sparse, svd_values
from .metrics import (
    GramStats,
    LayerBounds,
    NetworkBounds,
    centroid_angles,
    collapse_epsilon,
    compute_mased,
    embedding_norm_stats,
    gram_stats,
    layer_bounds,
    map_sigma_min,
    network_bounds,
    row_norm_spread_bound,
    spectral_alignment_epsilon,
    survival_probability,
)
from .model import (
    ForwardTape,
    ModelSpec,
    Parameters,
    backward,
    forward,
    forward_gcn,
    forward_resgcn,
    forward_sgc_stack,
    hop_split,
    init_parameters,
)
from .data import SbmSpec, dataset_stats, generate_sbm, load_dataset, save_dataset
from .train import (
    AdamState,
    MetricRecord,
    TrainConfig,
    TrainResult,
    adam_step,
    apply_cold_start,
    cross_entropy_loss,
    greg_term,
    train_model,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
