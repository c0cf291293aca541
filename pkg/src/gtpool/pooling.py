"""Transformer-based node-dropping pooling layer.

One layer scores nodes with multi-head self-attention (a global view from
the full attention matrix plus a local view from the adjacency-masked one),
selects a diverse subset of nodes with the roulette-wheel sampler, and
coarsens the graph: the attention matrix is refined to the selected rows so
every surviving node still aggregates from all original nodes, features pass
through a residual FFN block, and the adjacency is restricted to the
selected vertices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .gnn import init_uniform
from .rng import Rng
from .sampling import SampleSpec, ScoreDistribution, select


@dataclass
class PoolResult:
    """Output of one pooling step.

    ``idx`` are the surviving node indices (ascending) in the input graph's
    numbering; ``a_prime`` is the induced adjacency over them; ``x_prime``
    the transformed features; ``scores`` the significance distribution the
    selection was drawn from; ``refined_attention`` the per-head selected
    attention rows (M x n), kept for diagnostics.
    """

    idx: np.ndarray
    a_prime: np.ndarray
    x_prime: Tensor
    scores: ScoreDistribution
    refined_attention: list[Tensor]


class GtPoolLayer:
    """Multi-head attention scoring + diversified selection + coarsening."""

    def __init__(
        self,
        dim: int,
        heads: int,
        rng: Rng,
        mu: float = 0.5,
        lam: float = 0.5,
        method: str = "rwsv",
        dropout: float = 0.0,
        gate_scores: bool = False,
    ):
        if dim % heads != 0:
            raise ValueError(f"hidden dim {dim} not divisible by {heads} heads")
        if not 0.0 <= lam <= 1.0:
            raise ValueError(f"score weight must be in [0, 1], got {lam}")
        self.dim = dim
        self.heads = heads
        self.head_dim = dim // heads
        self.spec = SampleSpec(mu=mu, method=method)
        self.lam = lam
        self.dropout = dropout
        # Off by default: selection indices are discrete, so the scoring
        # vectors receive no gradient unless scores also gate the features.
        self.gate_scores = gate_scores

        d, dh = dim, self.head_dim
        self.wq = [init_uniform(d, dh, d, rng) for _ in range(heads)]
        self.wk = [init_uniform(d, dh, d, rng) for _ in range(heads)]
        self.wv = [init_uniform(d, dh, d, rng) for _ in range(heads)]
        self.theta_g = [init_uniform(dh, 1, dh, rng) for _ in range(heads)]
        self.theta_l = [init_uniform(dh, 1, dh, rng) for _ in range(heads)]
        self.wo = init_uniform(heads * dh, d, heads * dh, rng)
        self.ffn_w1 = init_uniform(d, 2 * d, d, rng)
        self.ffn_b1 = Tensor(np.zeros((1, 2 * d)), requires_grad=True)
        self.ffn_w2 = init_uniform(2 * d, d, 2 * d, rng)
        self.ffn_b2 = Tensor(np.zeros((1, d)), requires_grad=True)
        self.ln_gain = Tensor(np.ones((1, d)), requires_grad=True)
        self.ln_bias = Tensor(np.zeros((1, d)), requires_grad=True)

    def parameters(self) -> list[tuple[str, Tensor]]:
        named: list[tuple[str, Tensor]] = []
        for h in range(self.heads):
            named += [
                (f"wq{h}", self.wq[h]),
                (f"wk{h}", self.wk[h]),
                (f"wv{h}", self.wv[h]),
                (f"theta_g{h}", self.theta_g[h]),
                (f"theta_l{h}", self.theta_l[h]),
            ]
        named += [
            ("wo", self.wo),
            ("ffn_w1", self.ffn_w1),
            ("ffn_b1", self.ffn_b1),
            ("ffn_w2", self.ffn_w2),
            ("ffn_b2", self.ffn_b2),
            ("ln_gain", self.ln_gain),
            ("ln_bias", self.ln_bias),
        ]
        return named


def attention_matrices(
    layer: GtPoolLayer, x: Tensor
) -> tuple[list[Tensor], list[Tensor]]:
    """Per-head row-stochastic attention (n x n) and value (n x d_h) matrices."""
    inv_sqrt = 1.0 / math.sqrt(layer.head_dim)
    attn, values = [], []
    for h in range(layer.heads):
        q = ad.matmul(x, layer.wq[h])
        k = ad.matmul(x, layer.wk[h])
        logits = ad.scale(ad.matmul(q, ad.transpose(k)), inv_sqrt)
        attn.append(ad.row_softmax(logits))
        values.append(ad.matmul(x, layer.wv[h]))
    return attn, values


def score_nodes(
    layer: GtPoolLayer,
    adj: np.ndarray,
    attn: list[Tensor],
    values: list[Tensor],
) -> tuple[Tensor, ScoreDistribution]:
    """Significance scores over nodes.

    Each head contributes lam * tanh(A V theta_g) for the global view plus
    (1 - lam) * tanh((A ⊙ (adj + I)) V theta_l) for the local one; head
    contributions are summed and one softmax normalizes over nodes. The
    local mask is the binary adjacency with self-loops, unnormalized.
    """
    mask = Tensor(adj + np.eye(adj.shape[0]))
    total: Tensor | None = None
    for h in range(layer.heads):
        s_global = ad.tanh(ad.matmul(ad.matmul(attn[h], values[h]), layer.theta_g[h]))
        masked = ad.hadamard(attn[h], mask)
        s_local = ad.tanh(ad.matmul(ad.matmul(masked, values[h]), layer.theta_l[h]))
        combined = ad.add(
            ad.scale(s_global, layer.lam), ad.scale(s_local, 1.0 - layer.lam)
        )
        total = combined if total is None else ad.add(total, combined)
    s = ad.transpose(ad.row_softmax(ad.transpose(total)))
    dist = ScoreDistribution(s.data.ravel().copy())
    return s, dist


def induced_subgraph(adj: np.ndarray, idx) -> np.ndarray:
    """Adjacency restricted to ``idx`` and relabeled 0..M-1."""
    idx = np.asarray(idx, dtype=np.int64)
    return adj[np.ix_(idx, idx)].copy()


def pool(
    layer: GtPoolLayer,
    x: Tensor,
    adj: np.ndarray,
    train: bool = False,
    rng: Rng | None = None,
    frozen_idx=None,
) -> PoolResult:
    """Coarsen (x, adj) to the selected nodes.

    Selection is a constant of the backward pass: gradients flow through the
    refined attention, values, output projection, FFN, and residuals, never
    through the discrete indices. ``frozen_idx`` replays a fixed selection
    (used by gradient checks and diagnostics).
    """
    n = x.rows
    attn, values = attention_matrices(layer, x)
    s, dist = score_nodes(layer, adj, attn, values)
    if frozen_idx is None:
        idx = np.asarray(select(dist, layer.spec), dtype=np.int64)
    else:
        idx = np.asarray(frozen_idx, dtype=np.int64)

    refined = [ad.gather_rows(a, idx) for a in attn]
    pooled = ad.concat_cols(
        [ad.matmul(r, v) for r, v in zip(refined, values)]
    )
    projected = ad.matmul(pooled, layer.wo)
    if train and layer.dropout > 0.0:
        projected = ad.dropout(projected, layer.dropout, rng, train=True)
    x_hat = ad.add(projected, ad.gather_rows(x, idx))

    if layer.gate_scores:
        kept = ad.gather_rows(s, idx)
        x_hat = ad.scale_rows(x_hat, ad.div_by_scalar(kept, ad.sum_all(kept)))

    hidden = ad.gelu(
        ad.add(
            ad.matmul(
                ad.layer_norm(x_hat, layer.ln_gain, layer.ln_bias), layer.ffn_w1
            ),
            layer.ffn_b1,
        )
    )
    if train and layer.dropout > 0.0:
        hidden = ad.dropout(hidden, layer.dropout, rng, train=True)
    ffn_out = ad.add(ad.matmul(hidden, layer.ffn_w2), layer.ffn_b2)
    x_prime = ad.add(ffn_out, x_hat)

    return PoolResult(
        idx=idx,
        a_prime=induced_subgraph(adj, idx),
        x_prime=x_prime,
        scores=dist,
        refined_attention=refined,
    )
