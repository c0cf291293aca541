"""Shared test oracles: central finite differences and tiny graph builders."""

from __future__ import annotations

import numpy as np

from gtpool.autodiff import Tensor, no_grad
from gtpool.datasets import Graph, canonical_edges


def rel_error(a: np.ndarray, b: np.ndarray, floor: float = 1e-12) -> float:
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    return np.linalg.norm(a - b) / max(na, nb, floor)


def numeric_gradient(make_loss, param: Tensor, h: float = 1e-5) -> np.ndarray:
    """Central finite differences of make_loss() w.r.t. one tensor's entries.

    ``make_loss`` must rebuild the scalar loss from the parameters' current
    ``data`` buffers (and must re-seed any internal randomness itself).
    """
    grad = np.zeros_like(param.data)
    it = np.nditer(param.data, flags=["multi_index"])
    for _ in it:
        i = it.multi_index
        orig = param.data[i]
        param.data[i] = orig + h
        with no_grad():
            f_plus = make_loss().item()
        param.data[i] = orig - h
        with no_grad():
            f_minus = make_loss().item()
        param.data[i] = orig
        grad[i] = (f_plus - f_minus) / (2.0 * h)
    return grad


def gradcheck(make_loss, params: list[Tensor], h: float = 1e-5, tol: float = 1e-4) -> float:
    """Assert backward() matches finite differences for every parameter.

    Two caveats of the finite-difference oracle are handled explicitly:

    * gradient norms below ``h`` sit under the cancellation noise of central
      differences (eps * |loss| / h, ~1e-11 per element) and are compared
      against that floor instead of relatively;
    * a mismatch at step ``h`` is re-examined at ``h / 100``: ReLU/argmax
      kinks inside the differencing window vanish there, while a genuinely
      wrong backward formula persists at every step size.

    Returns the worst relative error seen at the primary step.
    """
    for p in params:
        p.grad = None
    loss = make_loss()
    loss.backward()
    worst = 0.0
    for p in params:
        analytic = p.grad.copy() if p.grad is not None else np.zeros_like(p.data)
        numeric = numeric_gradient(make_loss, p, h=h)
        err = rel_error(numeric, analytic, floor=h)
        if err >= tol:
            refined = numeric_gradient(make_loss, p, h=h / 100.0)
            assert np.allclose(refined, analytic, rtol=1e-3, atol=1e-7), (
                f"gradient mismatch persists at h={h / 100.0:g}: "
                f"rel err {rel_error(refined, analytic, floor=h):.3e}"
            )
        else:
            worst = max(worst, err)
    return worst


def graph_from_edges(n: int, edges, label: int = 0, x: np.ndarray | None = None) -> Graph:
    g = Graph(n=n, edges=canonical_edges(edges), label=label)
    if x is not None:
        g.x = Tensor(np.asarray(x, dtype=np.float64))
    return g


def path_graph(n: int, x: np.ndarray | None = None) -> Graph:
    return graph_from_edges(n, [(i, i + 1) for i in range(n - 1)], x=x)


def random_graph(n: int, d: int, rng: np.random.Generator, edge_prob: float = 0.4) -> Graph:
    edges = [
        (i, j)
        for i in range(n)
        for j in range(i + 1, n)
        if rng.uniform() < edge_prob
    ]
    return graph_from_edges(n, edges, x=rng.normal(size=(n, d)))
