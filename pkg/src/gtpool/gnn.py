"""Graph convolution layer and per-block readout."""

from __future__ import annotations

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .rng import Rng


def init_uniform(rows: int, cols: int, fan_in: int, rng: Rng) -> Tensor:
    """Trainable matrix initialized uniform(-sqrt(1/fan_in), +sqrt(1/fan_in))."""
    bound = (1.0 / fan_in) ** 0.5
    return Tensor(rng.uniform_array((rows, cols), -bound, bound), requires_grad=True)


class GcnLayer:
    """Symmetric-normalized graph convolution with a ReLU activation."""

    def __init__(self, in_dim: int, out_dim: int, rng: Rng):
        self.w = init_uniform(in_dim, out_dim, in_dim, rng)

    def parameters(self) -> list[tuple[str, Tensor]]:
        return [("w", self.w)]


def normalized_adjacency(adj: np.ndarray) -> np.ndarray:
    """D^-1/2 (A + I) D^-1/2 with self-loops added on the fly.

    Every node has degree >= 1 after the self-loop, so the scaling is finite
    even for isolated nodes.
    """
    a = adj + np.eye(adj.shape[0])
    d = a.sum(axis=1)
    inv_sqrt = 1.0 / np.sqrt(d)
    return a * inv_sqrt[:, None] * inv_sqrt[None, :]


def gcn_forward(layer: GcnLayer, x: Tensor, adj: np.ndarray) -> Tensor:
    """ReLU(norm_adj @ x @ w) over a dense adjacency without self-loops."""
    if adj.shape[0] != x.rows:
        raise ad.ShapeError(
            f"adjacency is {adj.shape} but features have {x.rows} rows"
        )
    propagated = ad.matmul(Tensor(normalized_adjacency(adj)), ad.matmul(x, layer.w))
    return ad.relu(propagated)


def readout(x: Tensor) -> Tensor:
    """Permutation-invariant graph vector: column-wise mean || max (1 x 2d)."""
    if x.rows == 0:
        raise ad.ShapeError("readout of an empty graph")
    return ad.concat_cols([ad.mean_rows(x), ad.max_rows(x)])
