"""Hierarchical graph-transformer pooling for graph classification.

The package stacks blocks of graph convolution followed by an attention-based
node-dropping pooling layer. Nodes are scored from both global (full
attention) and local (adjacency-masked attention) context, then selected by
deterministic roulette-wheel sampling so that representative low-scoring
nodes survive pooling. Everything runs on a small reverse-mode autodiff core
over dense float64 matrices.
"""

from .autodiff import Tensor, no_grad
from .datasets import (
    Dataset,
    FoldPlan,
    Graph,
    batches,
    build_features,
    erdos_renyi,
    parse_tudataset,
    stratified_folds,
    write_tudataset,
)
from .estimator import GtPoolClassifier
from .gnn import GcnLayer, gcn_forward, readout
from .model import GtPoolNet
from .optim import Adam
from .pooling import GtPoolLayer, PoolResult, pool
from .rng import Rng, mix_seed
from .sampling import (
    SampleSpec,
    ScoreDistribution,
    brute_force_select,
    rws,
    rwsv,
    sample_points,
    select,
    select_nodes,
)
from .synth import mutag_like
from .training import MetricsReport, RunConfig, cross_validate, sweep, train_fold

__version__ = "0.1.0"

__all__ = [
    "Adam",
    "Dataset",
    "FoldPlan",
    "GcnLayer",
    "Graph",
    "GtPoolClassifier",
    "GtPoolLayer",
    "GtPoolNet",
    "MetricsReport",
    "PoolResult",
    "Rng",
    "RunConfig",
    "SampleSpec",
    "ScoreDistribution",
    "Tensor",
    "batches",
    "brute_force_select",
    "build_features",
    "cross_validate",
    "erdos_renyi",
    "gcn_forward",
    "mix_seed",
    "mutag_like",
    "no_grad",
    "parse_tudataset",
    "pool",
    "readout",
    "rws",
    "rwsv",
    "sample_points",
    "select",
    "select_nodes",
    "stratified_folds",
    "sweep",
    "train_fold",
    "write_tudataset",
]
