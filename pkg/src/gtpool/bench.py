"""Iteration-time profiling and random-graph scalability benchmarks."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .autodiff import cross_entropy
from .datasets import Dataset, erdos_renyi
from .model import GtPoolNet
from .rng import Rng, mix_seed
from .training import RunConfig


@dataclass
class ProfileReport:
    forward_ms_mean: float
    forward_ms_std: float
    backward_ms_mean: float
    backward_ms_std: float
    iterations: int
    warmup: int
    batch: int
    param_count: int

    def to_dict(self) -> dict:
        return {
            "forward_ms_mean": self.forward_ms_mean,
            "forward_ms_std": self.forward_ms_std,
            "backward_ms_mean": self.backward_ms_mean,
            "backward_ms_std": self.backward_ms_std,
            "iterations": self.iterations,
            "warmup": self.warmup,
            "batch": self.batch,
            "param_count": self.param_count,
        }


def profile_iterations(
    config: RunConfig,
    dataset: Dataset,
    iterations: int = 100,
    warmup: int = 10,
) -> ProfileReport:
    """Time forward and backward passes per training iteration.

    One iteration is one batch of graphs (cycling through the dataset in a
    fixed order). Warm-up iterations run the same work but are excluded from
    the statistics. Single-threaded by design so timings are stable.
    """
    rng = Rng(mix_seed(config.seed, 0xBE7C))
    num_classes = max(dataset.num_classes, 2)
    model = GtPoolNet(
        in_dim=dataset.feature_dim,
        num_classes=num_classes,
        hidden=config.hidden,
        layers=config.layers,
        heads=config.heads,
        mu=config.mu,
        lam=config.lam,
        method=config.sampler,
        dropout=config.dropout,
        rng=rng,
    )
    graphs = dataset.graphs
    fwd_ms, bwd_ms = [], []
    cursor = 0
    for it in range(warmup + iterations):
        batch = [graphs[(cursor + j) % len(graphs)] for j in range(config.batch)]
        cursor = (cursor + config.batch) % len(graphs)
        for p in model.parameters():
            p.grad = None

        t0 = time.perf_counter()
        losses = [
            cross_entropy(model.forward(g, train=True, rng=rng).logits, [g.label])
            for g in batch
        ]
        t1 = time.perf_counter()
        for loss in losses:
            loss.backward()
        t2 = time.perf_counter()

        if it >= warmup:
            fwd_ms.append((t1 - t0) * 1e3)
            bwd_ms.append((t2 - t1) * 1e3)

    return ProfileReport(
        forward_ms_mean=float(np.mean(fwd_ms)),
        forward_ms_std=float(np.std(fwd_ms)),
        backward_ms_mean=float(np.mean(bwd_ms)),
        backward_ms_std=float(np.std(bwd_ms)),
        iterations=iterations,
        warmup=warmup,
        batch=config.batch,
        param_count=model.count_parameters(),
    )


def bench_scale(
    node_counts,
    densities,
    seed: int = 0,
    config: RunConfig | None = None,
) -> list[dict]:
    """One full forward+backward of the default model per (n, density) cell.

    Allocation failures are recorded as ``"OOM"`` cells instead of aborting
    the sweep.
    """
    config = config if config is not None else RunConfig()
    cells = []
    for n in node_counts:
        if n < 2:
            raise ValueError(f"node counts must be >= 2, got {n}")
        for density in densities:
            cells.append(_bench_cell(int(n), float(density), seed, config))
    return cells


def _bench_cell(n: int, density: float, seed: int, config: RunConfig) -> dict:
    try:
        graph = erdos_renyi(n, density, seed=mix_seed(seed, n, int(density * 1000)))
        rng = Rng(mix_seed(seed, 0x5CA1E))
        model = GtPoolNet(
            in_dim=1,
            num_classes=2,
            hidden=config.hidden,
            layers=config.layers,
            heads=config.heads,
            mu=config.mu,
            lam=config.lam,
            method=config.sampler,
            rng=rng,
        )
        t0 = time.perf_counter()
        loss = cross_entropy(model.forward(graph).logits, [0])
        loss.backward()
        ms = (time.perf_counter() - t0) * 1e3
        return {"nodes": n, "density": density, "milliseconds": ms}
    except MemoryError:
        return {"nodes": n, "density": density, "milliseconds": "OOM"}
