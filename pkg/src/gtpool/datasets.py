"""Graph collections: TUDataset-format parsing, features, folds, batches.

The on-disk convention is the public TUDataset layout: a directory
``<root>/<NAME>/`` containing ``<NAME>_A.txt`` (comma-separated, 1-indexed
edge pairs), ``<NAME>_graph_indicator.txt`` (node -> graph id, 1-indexed),
``<NAME>_graph_labels.txt``, and optionally ``<NAME>_node_labels.txt`` and
``<NAME>_node_attributes.txt``.
"""

from __future__ import annotations

import json
import logging
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .autodiff import Tensor
from .rng import Rng, mix_seed

log = logging.getLogger(__name__)

# Reference graph count for the PROTEINS collection varies across published
# statistics; the canonical release has 1113. See parse_tudataset.
_PROTEINS_REPORTED = 1173


class FormatError(ValueError):
    """A dataset directory is missing or malformed at the file level."""


class ConsistencyError(ValueError):
    """File contents contradict each other (reported with a line number)."""


@dataclass
class Graph:
    """One undirected graph: no self-loops, each edge stored once as u < v."""

    n: int
    edges: np.ndarray  # (E, 2) int64, canonical u < v, lexicographically sorted
    label: int
    x: Tensor | None = None
    node_labels: np.ndarray | None = None  # (n,) int64
    node_attributes: np.ndarray | None = None  # (n, k) float64

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=np.int64)
        if self.edges.size:
            np.add.at(deg, self.edges[:, 0], 1)
            np.add.at(deg, self.edges[:, 1], 1)
        return deg

    def dense_adjacency(self) -> np.ndarray:
        """Symmetric 0/1 matrix without self-loops."""
        a = np.zeros((self.n, self.n), dtype=np.float64)
        if self.edges.size:
            u, v = self.edges[:, 0], self.edges[:, 1]
            a[u, v] = 1.0
            a[v, u] = 1.0
        return a

    @property
    def num_edges(self) -> int:
        return int(self.edges.shape[0])


@dataclass
class Dataset:
    """An ordered collection of graphs with contiguous 0-based class labels."""

    name: str
    graphs: list[Graph]
    num_classes: int
    feature_dim: int | None = None

    def __len__(self) -> int:
        return len(self.graphs)

    def labels(self) -> np.ndarray:
        return np.array([g.label for g in self.graphs], dtype=np.int64)


def canonical_edges(pairs) -> np.ndarray:
    """Dedup + drop self-loops + orient u < v + sort lexicographically."""
    arr = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    if arr.size == 0:
        return np.empty((0, 2), dtype=np.int64)
    lo = arr.min(axis=1)
    hi = arr.max(axis=1)
    keep = lo != hi
    edges = np.unique(np.stack([lo[keep], hi[keep]], axis=1), axis=0)
    return edges.reshape(-1, 2)


# -- parsing -------------------------------------------------------------------


def parse_tudataset(dir_path) -> Dataset:
    """Load a TUDataset directory into a Dataset with 0-indexed local ids."""
    root = Path(dir_path)
    name = root.name
    if not root.is_dir():
        raise FormatError(f"dataset directory not found: {root}")

    def required(suffix: str) -> Path:
        p = root / f"{name}_{suffix}.txt"
        if not p.is_file():
            raise FormatError(f"missing mandatory file: {p.name}")
        return p

    indicator = _read_ints(required("graph_indicator"))
    graph_labels_raw = _read_ints(required("graph_labels"))
    edges_path = required("A")

    num_nodes = indicator.size
    num_graphs = graph_labels_raw.size
    if indicator.min() < 1 or indicator.max() > num_graphs:
        raise ConsistencyError(
            f"graph_indicator references graph {indicator.max()} but only "
            f"{num_graphs} graph labels are present"
        )

    # global node id -> (graph id, local id), both 0-based
    graph_of = indicator - 1
    local_id = np.zeros(num_nodes, dtype=np.int64)
    counts = np.zeros(num_graphs, dtype=np.int64)
    for i, g in enumerate(graph_of):
        local_id[i] = counts[g]
        counts[g] += 1

    per_graph_edges: list[list[tuple[int, int]]] = [[] for _ in range(num_graphs)]
    with open(edges_path) as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.replace(",", " ").split()
            if len(parts) != 2:
                raise FormatError(
                    f"{edges_path.name}:{line_no}: expected 'u, v', got {line!r}"
                )
            u, v = int(parts[0]) - 1, int(parts[1]) - 1
            if not (0 <= u < num_nodes and 0 <= v < num_nodes):
                raise ConsistencyError(
                    f"{edges_path.name}:{line_no}: node id out of range"
                )
            if graph_of[u] != graph_of[v]:
                raise ConsistencyError(
                    f"{edges_path.name}:{line_no}: edge joins node of graph "
                    f"{graph_of[u] + 1} to node of graph {graph_of[v] + 1}"
                )
            per_graph_edges[graph_of[u]].append((local_id[u], local_id[v]))

    node_labels = _read_optional_ints(root / f"{name}_node_labels.txt")
    node_attrs = _read_optional_floats(root / f"{name}_node_attributes.txt")
    if node_labels is not None and node_labels.size != num_nodes:
        raise ConsistencyError(
            f"{name}_node_labels.txt has {node_labels.size} rows, expected {num_nodes}"
        )
    if node_attrs is not None and node_attrs.shape[0] != num_nodes:
        raise ConsistencyError(
            f"{name}_node_attributes.txt has {node_attrs.shape[0]} rows, "
            f"expected {num_nodes}"
        )

    # remap graph labels to contiguous 0-based classes
    classes = np.unique(graph_labels_raw)
    label_map = {int(c): i for i, c in enumerate(classes)}

    node_order = np.argsort(graph_of, kind="stable")
    boundaries = np.searchsorted(graph_of[node_order], np.arange(num_graphs + 1))
    graphs = []
    for g in range(num_graphs):
        members = node_order[boundaries[g] : boundaries[g + 1]]
        graphs.append(
            Graph(
                n=int(counts[g]),
                edges=canonical_edges(per_graph_edges[g])
                if per_graph_edges[g]
                else np.empty((0, 2), dtype=np.int64),
                label=label_map[int(graph_labels_raw[g])],
                node_labels=node_labels[members] if node_labels is not None else None,
                node_attributes=node_attrs[members] if node_attrs is not None else None,
            )
        )

    if name.upper() == "PROTEINS" and num_graphs != _PROTEINS_REPORTED:
        log.warning(
            "PROTEINS parsed with %d graphs; some published statistics list %d. "
            "Proceeding with the file contents.",
            num_graphs,
            _PROTEINS_REPORTED,
        )

    return Dataset(name=name, graphs=graphs, num_classes=len(classes))


def write_tudataset(dataset: Dataset, dir_path) -> None:
    """Write a Dataset back out in TUDataset layout (edges in both directions)."""
    root = Path(dir_path)
    root.mkdir(parents=True, exist_ok=True)
    name = dataset.name
    a_lines, ind_lines, lab_lines = [], [], []
    nl_lines, na_lines = [], []
    offset = 0
    for gid, g in enumerate(dataset.graphs, start=1):
        for u, v in g.edges:
            a_lines.append(f"{offset + u + 1}, {offset + v + 1}")
            a_lines.append(f"{offset + v + 1}, {offset + u + 1}")
        ind_lines.extend([str(gid)] * g.n)
        lab_lines.append(str(g.label))
        if g.node_labels is not None:
            nl_lines.extend(str(int(l)) for l in g.node_labels)
        if g.node_attributes is not None:
            na_lines.extend(
                ", ".join(repr(float(x)) for x in row) for row in g.node_attributes
            )
        offset += g.n
    (root / f"{name}_A.txt").write_text("\n".join(a_lines) + "\n")
    (root / f"{name}_graph_indicator.txt").write_text("\n".join(ind_lines) + "\n")
    (root / f"{name}_graph_labels.txt").write_text("\n".join(lab_lines) + "\n")
    if nl_lines:
        (root / f"{name}_node_labels.txt").write_text("\n".join(nl_lines) + "\n")
    if na_lines:
        (root / f"{name}_node_attributes.txt").write_text("\n".join(na_lines) + "\n")


def _read_ints(path: Path) -> np.ndarray:
    values = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                values.append(int(float(line)))
    return np.array(values, dtype=np.int64)


def _read_optional_ints(path: Path) -> np.ndarray | None:
    return _read_ints(path) if path.is_file() else None


def _read_optional_floats(path: Path) -> np.ndarray | None:
    if not path.is_file():
        return None
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append([float(x) for x in line.replace(",", " ").split()])
    return np.array(rows, dtype=np.float64)


# -- features ------------------------------------------------------------------

FEATURE_SCHEMES = ("auto", "node_labels_onehot", "degree_onehot", "attributes")


def build_features(
    dataset: Dataset, scheme: str = "auto", degree_cap: int = 64
) -> Dataset:
    """Populate every graph's feature matrix in place and return the dataset.

    ``auto`` prefers one-hot node labels, falling back to capped one-hot
    degrees; ``attributes`` uses continuous node attributes verbatim.
    """
    if scheme not in FEATURE_SCHEMES:
        raise ValueError(f"scheme must be one of {FEATURE_SCHEMES}, got {scheme!r}")
    has_labels = all(g.node_labels is not None for g in dataset.graphs)
    has_attrs = all(g.node_attributes is not None for g in dataset.graphs)
    if scheme == "auto":
        scheme = "node_labels_onehot" if has_labels else "degree_onehot"

    if scheme == "node_labels_onehot":
        if not has_labels:
            raise ValueError("node_labels_onehot requires node labels in the files")
        values = np.unique(np.concatenate([g.node_labels for g in dataset.graphs]))
        lookup = {int(v): i for i, v in enumerate(values)}
        dim = len(values)
        for g in dataset.graphs:
            x = np.zeros((g.n, dim))
            x[np.arange(g.n), [lookup[int(v)] for v in g.node_labels]] = 1.0
            g.x = Tensor(x)
    elif scheme == "degree_onehot":
        dim = (
            min(max(int(g.degrees().max(initial=0)) for g in dataset.graphs), degree_cap)
            + 1
        )
        for g in dataset.graphs:
            x = np.zeros((g.n, dim))
            x[np.arange(g.n), np.minimum(g.degrees(), degree_cap)] = 1.0
            g.x = Tensor(x)
    else:
        if not has_attrs:
            raise ValueError("attributes scheme requires node attributes in the files")
        dim = dataset.graphs[0].node_attributes.shape[1]
        for g in dataset.graphs:
            g.x = Tensor(np.asarray(g.node_attributes, dtype=np.float64))

    dataset.feature_dim = dim
    return dataset


# -- folds and batches -----------------------------------------------------------


@dataclass
class FoldPlan:
    """Assignment of every graph index to one of k folds."""

    k: int
    seed: int
    assignments: np.ndarray  # (num_graphs,) int64 fold ids

    def test_indices(self, fold: int) -> list[int]:
        return np.flatnonzero(self.assignments == fold).tolist()

    def train_indices(self, fold: int) -> list[int]:
        return np.flatnonzero(self.assignments != fold).tolist()

    def to_json(self) -> str:
        return json.dumps(
            {
                "k": self.k,
                "seed": self.seed,
                "assignments": {str(i): int(f) for i, f in enumerate(self.assignments)},
            },
            indent=2,
        )


def stratified_folds(dataset: Dataset, k: int = 10, seed: int = 0) -> FoldPlan:
    """Partition graph indices into k folds, stratified by class and with fold
    sizes balanced to within one graph."""
    labels = dataset.labels()
    rng = Rng(mix_seed(seed, 0xF01D))
    assignments = np.full(len(labels), -1, dtype=np.int64)
    loads = [0] * k

    for cls in np.unique(labels):
        members = np.flatnonzero(labels == cls).tolist()
        if len(members) < k:
            warnings.warn(
                f"class {cls} has {len(members)} graphs (< {k} folds); "
                "stratification is approximate for this class",
                stacklevel=2,
            )
        rng.shuffle(members)
        chunks = _split_chunks(members, k)
        chunks.sort(key=len, reverse=True)
        # biggest chunks go to the currently lightest folds
        order = sorted(range(k), key=lambda f: (loads[f], f))
        for fold, chunk in zip(order, chunks):
            for idx in chunk:
                assignments[idx] = fold
            loads[fold] += len(chunk)

    return FoldPlan(k=k, seed=seed, assignments=assignments)


def _split_chunks(items: list[int], k: int) -> list[list[int]]:
    base, extra = divmod(len(items), k)
    chunks, pos = [], 0
    for i in range(k):
        size = base + (1 if i < extra else 0)
        chunks.append(items[pos : pos + size])
        pos += size
    return chunks


def stratified_holdout(
    indices: list[int], labels, fraction: float, seed: int
) -> tuple[list[int], list[int]]:
    """Carve a stratified holdout (e.g. validation) out of ``indices``.

    Every class keeps at least one member in the retained part; singleton
    classes contribute nothing to the holdout.
    """
    labels = np.asarray(labels)
    rng = Rng(mix_seed(seed, 0x401D))
    keep, held = [], []
    for cls in np.unique(labels):
        members = [i for i in indices if labels[i] == cls]
        rng.shuffle(members)
        n_held = min(max(1, round(fraction * len(members))), len(members) - 1)
        if len(members) <= 1:
            n_held = 0
        held.extend(members[:n_held])
        keep.extend(members[n_held:])
    return sorted(keep), sorted(held)


def batches(indices: list[int], batch_size: int, seed: int):
    """Yield shuffled index lists of at most ``batch_size`` (deterministic)."""
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {batch_size}")
    order = list(indices)
    Rng(mix_seed(seed, 0xBA7C)).shuffle(order)
    for start in range(0, len(order), batch_size):
        yield order[start : start + batch_size]


# -- random graphs ----------------------------------------------------------------


def erdos_renyi(n: int, density: float, seed: int) -> Graph:
    """G(n, p) graph with constant single-column features and label 0."""
    if n < 2:
        raise ValueError(f"random graph needs n >= 2, got {n}")
    if not 0.0 < density <= 1.0:
        raise ValueError(f"density must be in (0, 1], got {density}")
    rng = Rng(mix_seed(seed, 0xE8D05))
    iu, iv = np.triu_indices(n, k=1)
    mask = rng.uniform_array(iu.shape) < density
    edges = np.stack([iu[mask], iv[mask]], axis=1).astype(np.int64)
    return Graph(n=n, edges=edges, label=0, x=Tensor(np.ones((n, 1))))
