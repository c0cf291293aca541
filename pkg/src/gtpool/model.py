"""Hierarchical classifier: stacked (GCN -> pooling) blocks with summed readouts.

The graph shrinks by the pooling ratio at every block; each block's output is
read out to a fixed-size vector, the readouts are summed, and a small MLP
head produces class logits.

Checkpoint format (little-endian throughout):

    magic   4 bytes  b"GTPC"
    version u16      currently 1
    count   u32      number of named arrays
    entry   u16 name length, utf-8 name, u32 rows, u32 cols,
            rows*cols float64 values in row-major order
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .datasets import Graph
from .gnn import GcnLayer, gcn_forward, init_uniform, readout
from .pooling import GtPoolLayer, PoolResult, pool
from .rng import Rng

_MAGIC = b"GTPC"
_VERSION = 1


@dataclass
class ForwardResult:
    logits: Tensor  # 1 x num_classes
    pools: list[PoolResult]


class GtPoolNet:
    """Input embedding, ``layers`` blocks of (GCN -> pooling), MLP head."""

    def __init__(
        self,
        in_dim: int,
        num_classes: int,
        hidden: int = 64,
        layers: int = 3,
        heads: int = 4,
        mu: float = 0.5,
        lam: float = 0.5,
        method: str = "rwsv",
        dropout: float = 0.0,
        gate_scores: bool = False,
        rng: Rng | None = None,
    ):
        if layers < 1:
            raise ValueError(f"need at least one block, got layers={layers}")
        rng = rng if rng is not None else Rng(0)
        self.in_dim = in_dim
        self.num_classes = num_classes
        self.hidden = hidden
        self.dropout = dropout

        self.embed_w = init_uniform(in_dim, hidden, in_dim, rng)
        self.embed_b = Tensor(np.zeros((1, hidden)), requires_grad=True)
        self.blocks = [
            (
                GcnLayer(hidden, hidden, rng),
                GtPoolLayer(
                    hidden,
                    heads,
                    rng,
                    mu=mu,
                    lam=lam,
                    method=method,
                    dropout=dropout,
                    gate_scores=gate_scores,
                ),
            )
            for _ in range(layers)
        ]
        self.head_w1 = init_uniform(2 * hidden, hidden, 2 * hidden, rng)
        self.head_b1 = Tensor(np.zeros((1, hidden)), requires_grad=True)
        self.head_w2 = init_uniform(hidden, num_classes, hidden, rng)
        self.head_b2 = Tensor(np.zeros((1, num_classes)), requires_grad=True)

    # -- parameters ---------------------------------------------------------

    def named_parameters(self) -> list[tuple[str, Tensor]]:
        named = [("embed.w", self.embed_w), ("embed.b", self.embed_b)]
        for i, (gcn, pl) in enumerate(self.blocks):
            named += [(f"block{i}.gcn.{n}", t) for n, t in gcn.parameters()]
            named += [(f"block{i}.pool.{n}", t) for n, t in pl.parameters()]
        named += [
            ("head.w1", self.head_w1),
            ("head.b1", self.head_b1),
            ("head.w2", self.head_w2),
            ("head.b2", self.head_b2),
        ]
        return named

    def parameters(self) -> list[Tensor]:
        return [t for _, t in self.named_parameters()]

    def count_parameters(self) -> int:
        return sum(t.data.size for t in self.parameters())

    # -- forward ------------------------------------------------------------

    def forward(
        self,
        graph: Graph,
        train: bool = False,
        rng: Rng | None = None,
        frozen_indices: list | None = None,
    ) -> ForwardResult:
        """Logits for one graph; ``frozen_indices`` replays fixed selections."""
        x = ad.add(ad.matmul(graph.x, self.embed_w), self.embed_b)
        adj = graph.dense_adjacency()
        pools: list[PoolResult] = []
        summed: Tensor | None = None
        for i, (gcn, pool_layer) in enumerate(self.blocks):
            x = gcn_forward(gcn, x, adj)
            result = pool(
                pool_layer,
                x,
                adj,
                train=train,
                rng=rng,
                frozen_idx=frozen_indices[i] if frozen_indices is not None else None,
            )
            pools.append(result)
            x, adj = result.x_prime, result.a_prime
            r = readout(x)
            summed = r if summed is None else ad.add(summed, r)

        h = ad.relu(ad.add(ad.matmul(summed, self.head_w1), self.head_b1))
        if train and self.dropout > 0.0:
            h = ad.dropout(h, self.dropout, rng, train=True)
        logits = ad.add(ad.matmul(h, self.head_w2), self.head_b2)
        return ForwardResult(logits=logits, pools=pools)

    # -- state --------------------------------------------------------------

    def state_dict(self) -> dict[str, np.ndarray]:
        return {name: t.data.copy() for name, t in self.named_parameters()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        for name, t in self.named_parameters():
            if name not in state:
                raise KeyError(f"checkpoint missing parameter {name!r}")
            arr = np.asarray(state[name], dtype=np.float64)
            if arr.shape != t.data.shape:
                raise ValueError(
                    f"shape mismatch for {name!r}: checkpoint {arr.shape}, "
                    f"model {t.data.shape}"
                )
            t.data = arr.copy()

    def save(self, path) -> None:
        save_checkpoint(path, self.state_dict())

    def load(self, path) -> None:
        self.load_state_dict(load_checkpoint(path))


# -- checkpoint io ---------------------------------------------------------------


def save_checkpoint(path, arrays: dict[str, np.ndarray]) -> None:
    """Write named float64 matrices in the documented binary layout."""
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<HI", _VERSION, len(arrays)))
        for name, arr in arrays.items():
            arr = np.ascontiguousarray(arr, dtype="<f8")
            encoded = name.encode("utf-8")
            fh.write(struct.pack("<H", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<II", arr.shape[0], arr.shape[1]))
            fh.write(arr.tobytes())


def load_checkpoint(path) -> dict[str, np.ndarray]:
    with open(path, "rb") as fh:
        if fh.read(4) != _MAGIC:
            raise ValueError(f"{path}: not a checkpoint file")
        version, count = struct.unpack("<HI", fh.read(6))
        if version != _VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version {version}")
        arrays: dict[str, np.ndarray] = {}
        for _ in range(count):
            (name_len,) = struct.unpack("<H", fh.read(2))
            name = fh.read(name_len).decode("utf-8")
            rows, cols = struct.unpack("<II", fh.read(8))
            buf = fh.read(rows * cols * 8)
            arrays[name] = np.frombuffer(buf, dtype="<f8").reshape(rows, cols).copy()
    return arrays
