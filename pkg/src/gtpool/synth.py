"""Synthetic molecule-like benchmark data.

No benchmark graphs ship with the package, so this module generates a
deterministic stand-in collection whose shape matches the classic MUTAG
statistics: 188 graphs, two classes split 125/63 (majority rate 66.5%),
about 18 nodes per graph, and 7 discrete node labels. Class 1 graphs carry
nitro-style decorations (a label-1 hub with two label-2 leaves) on a ring
skeleton; class 0 graphs carry halogen-style leaves instead, so the classes
are separable from both structure and label composition.
"""

from __future__ import annotations

from .datasets import Dataset, Graph, canonical_edges
from .rng import Rng, mix_seed

import numpy as np

CARBON, NITROGEN, OXYGEN = 0, 1, 2
HALOGENS = (3, 4, 5, 6)


def mutag_like(seed: int = 0, name: str = "MUTAG") -> Dataset:
    """The 188-graph, 2-class synthetic collection (node features unset)."""
    rng = Rng(mix_seed(seed, 0x3C0FFEE))
    labels = [1] * 125 + [0] * 63
    rng.shuffle(labels)
    graphs = [_molecule(y, rng) for y in labels]
    return Dataset(name=name, graphs=graphs, num_classes=2)


def _molecule(y: int, rng: Rng) -> Graph:
    node_labels: list[int] = []
    edges: list[tuple[int, int]] = []

    def add_node(label: int) -> int:
        node_labels.append(label)
        return len(node_labels) - 1

    # hexagonal ring, occasionally with one nitrogen substitution
    ring = [add_node(CARBON) for _ in range(6)]
    if rng.uniform() < 0.25:
        node_labels[ring[rng.randrange(6)]] = NITROGEN
    for i in range(6):
        edges.append((ring[i], ring[(i + 1) % 6]))

    # fused second ring sharing one edge
    if rng.uniform() < 0.7:
        a, b = ring[0], ring[1]
        chain = [add_node(CARBON) for _ in range(4)]
        edges.append((a, chain[0]))
        for i in range(3):
            edges.append((chain[i], chain[i + 1]))
        edges.append((chain[3], b))

    def attach_chain(length: int) -> None:
        prev = rng.randrange(len(node_labels))
        for _ in range(length):
            nxt = add_node(CARBON)
            edges.append((prev, nxt))
            prev = nxt

    attach_chain(2 + rng.randrange(6))

    if y == 1:
        # nitro-style groups: N hub bonded to two O leaves
        for _ in range(1 + rng.randrange(2)):
            host = rng.randrange(len(node_labels))
            hub = add_node(NITROGEN)
            edges.append((host, hub))
            for _ in range(2):
                edges.append((hub, add_node(OXYGEN)))
    else:
        for _ in range(1 + rng.randrange(3)):
            host = rng.randrange(len(node_labels))
            leaf = add_node(HALOGENS[rng.randrange(len(HALOGENS))])
            edges.append((host, leaf))
        attach_chain(rng.randrange(6))
        if rng.uniform() < 0.3:  # lone hydroxyl-style oxygen, mild class overlap
            edges.append((rng.randrange(len(node_labels)), add_node(OXYGEN)))

    return Graph(
        n=len(node_labels),
        edges=canonical_edges(edges),
        label=y,
        node_labels=np.array(node_labels, dtype=np.int64),
    )
