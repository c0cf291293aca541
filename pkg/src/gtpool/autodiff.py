"""Dense 2-D float64 tensors with tape-based reverse-mode differentiation.

Every tensor is a row-major matrix; scalars are 1x1. Ops record a backward
closure on the output node, and ``backward()`` replays the tape in reverse
topological order. Graphs are per-example: once the gradients are in the
leaves the intermediate nodes are ordinary garbage.
"""

from __future__ import annotations

import math
from contextlib import contextmanager

import numpy as np

from .rng import Rng

__all__ = [
    "Tensor",
    "ShapeError",
    "no_grad",
    "matmul",
    "add",
    "sub",
    "hadamard",
    "scale",
    "scale_rows",
    "relu",
    "tanh",
    "gelu",
    "row_softmax",
    "mean_rows",
    "max_rows",
    "sum_all",
    "div_by_scalar",
    "concat_cols",
    "gather_rows",
    "transpose",
    "layer_norm",
    "dropout",
    "cross_entropy",
]

# sqrt(2/pi) for the tanh form of GeLU.
_GELU_C = math.sqrt(2.0 / math.pi)
_GELU_A = 0.044715

# When True, every op asserts its output is finite. Off by default; the test
# suite flips it on so a NaN inside a composite op fails loudly at its source.
CHECK_FINITE = False

_grad_enabled = True


class ShapeError(ValueError):
    """Operand shapes are incompatible with the requested op."""


@contextmanager
def no_grad():
    """Disable tape recording; ops inside produce detached tensors."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


class Tensor:
    """A 2-D float64 matrix participating in a reverse-mode tape."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False):
        arr = np.asarray(data, dtype=np.float64)
        if arr.ndim == 0:
            arr = arr.reshape(1, 1)
        elif arr.ndim == 1:
            arr = arr.reshape(1, -1)
        elif arr.ndim != 2:
            raise ShapeError(f"tensors are 2-D, got array of shape {arr.shape}")
        self.data = arr
        self.grad = None
        self.requires_grad = requires_grad
        self._parents = ()
        self._backward = None

    # -- structure ---------------------------------------------------------

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f"item() needs a 1x1 tensor, got {self.shape}")
        return float(self.data[0, 0])

    def detach(self) -> "Tensor":
        return Tensor(self.data.copy())

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}{flag})"

    # Leaves pickle cleanly; tape state never crosses process boundaries.
    def __getstate__(self):
        return {"data": self.data, "requires_grad": self.requires_grad}

    def __setstate__(self, state):
        self.data = state["data"]
        self.grad = None
        self.requires_grad = state["requires_grad"]
        self._parents = ()
        self._backward = None

    # -- autodiff ----------------------------------------------------------

    def backward(self) -> None:
        """Backpropagate from this scalar through the recorded tape."""
        if self.data.size != 1:
            raise ShapeError(f"backward() starts from a 1x1 tensor, got {self.shape}")
        topo: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, done = stack.pop()
            if done:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if id(parent) not in seen:
                    stack.append((parent, False))
        _accumulate(self, np.ones_like(self.data))
        for node in reversed(topo):
            if node._backward is not None:
                node._backward()

    # -- operator sugar ------------------------------------------------------

    def __matmul__(self, other: "Tensor") -> "Tensor":
        return matmul(self, other)

    def __add__(self, other: "Tensor") -> "Tensor":
        return add(self, other)

    def __sub__(self, other: "Tensor") -> "Tensor":
        return sub(self, other)

    def __mul__(self, other):
        if isinstance(other, Tensor):
            return hadamard(self, other)
        return scale(self, float(other))

    def __rmul__(self, other):
        return scale(self, float(other))

    def t(self) -> "Tensor":
        return transpose(self)

    def relu(self) -> "Tensor":
        return relu(self)

    def tanh(self) -> "Tensor":
        return tanh(self)

    def gelu(self) -> "Tensor":
        return gelu(self)

    def row_softmax(self) -> "Tensor":
        return row_softmax(self)


def _node(data: np.ndarray, *parents: Tensor) -> Tensor:
    if CHECK_FINITE and not np.isfinite(data).all():
        raise FloatingPointError("op produced a non-finite value")
    out = Tensor.__new__(Tensor)
    out.data = data
    out.grad = None
    out.requires_grad = _grad_enabled and any(p.requires_grad for p in parents)
    out._parents = parents if out.requires_grad else ()
    out._backward = None
    return out


def _accumulate(t: Tensor, g: np.ndarray) -> None:
    if t.requires_grad:
        if t.grad is None:
            t.grad = np.zeros_like(t.data)
        t.grad += g


# -- binary ops --------------------------------------------------------------


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product a @ b."""
    if a.cols != b.rows:
        raise ShapeError(f"matmul: inner dimensions differ, {a.shape} @ {b.shape}")
    out = _node(a.data @ b.data, a, b)
    if out.requires_grad:

        def backward():
            g = out.grad
            _accumulate(a, g @ b.data.T)
            _accumulate(b, a.data.T @ g)

        out._backward = backward
    return out


def add(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise sum; the second operand may be a 1xC row broadcast over rows."""
    if a.shape != b.shape and not (b.rows == 1 and b.cols == a.cols):
        raise ShapeError(f"add: incompatible shapes {a.shape} + {b.shape}")
    out = _node(a.data + b.data, a, b)
    if out.requires_grad:
        broadcast = b.shape != a.shape

        def backward():
            g = out.grad
            _accumulate(a, g)
            _accumulate(b, g.sum(axis=0, keepdims=True) if broadcast else g)

        out._backward = backward
    return out


def sub(a: Tensor, b: Tensor) -> Tensor:
    if a.shape != b.shape:
        raise ShapeError(f"sub: incompatible shapes {a.shape} - {b.shape}")
    out = _node(a.data - b.data, a, b)
    if out.requires_grad:

        def backward():
            g = out.grad
            _accumulate(a, g)
            _accumulate(b, -g)

        out._backward = backward
    return out


def hadamard(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise product of same-shape tensors."""
    if a.shape != b.shape:
        raise ShapeError(f"hadamard: incompatible shapes {a.shape} * {b.shape}")
    out = _node(a.data * b.data, a, b)
    if out.requires_grad:

        def backward():
            g = out.grad
            _accumulate(a, g * b.data)
            _accumulate(b, g * a.data)

        out._backward = backward
    return out


def scale(a: Tensor, c: float) -> Tensor:
    """Multiply by a python scalar constant."""
    out = _node(a.data * c, a)
    if out.requires_grad:

        def backward():
            _accumulate(a, out.grad * c)

        out._backward = backward
    return out


def scale_rows(a: Tensor, s: Tensor) -> Tensor:
    """Scale row i of ``a`` by the scalar s[i, 0]; both operands get gradients."""
    if s.cols != 1 or s.rows != a.rows:
        raise ShapeError(f"scale_rows: scale must be {a.rows}x1, got {s.shape}")
    out = _node(a.data * s.data, a, s)
    if out.requires_grad:

        def backward():
            g = out.grad
            _accumulate(a, g * s.data)
            _accumulate(s, (g * a.data).sum(axis=1, keepdims=True))

        out._backward = backward
    return out


def div_by_scalar(a: Tensor, denom: Tensor) -> Tensor:
    """Divide every entry of ``a`` by the 1x1 tensor ``denom``."""
    if denom.data.size != 1:
        raise ShapeError(f"div_by_scalar: denominator must be 1x1, got {denom.shape}")
    d = denom.data[0, 0]
    out = _node(a.data / d, a, denom)
    if out.requires_grad:

        def backward():
            g = out.grad
            _accumulate(a, g / d)
            _accumulate(denom, np.array([[-(g * a.data).sum() / (d * d)]]))

        out._backward = backward
    return out


# -- elementwise nonlinearities ------------------------------------------------


def relu(a: Tensor) -> Tensor:
    out = _node(np.maximum(a.data, 0.0), a)
    if out.requires_grad:

        def backward():
            _accumulate(a, out.grad * (a.data > 0.0))

        out._backward = backward
    return out


def tanh(a: Tensor) -> Tensor:
    y = np.tanh(a.data)
    out = _node(y, a)
    if out.requires_grad:

        def backward():
            _accumulate(a, out.grad * (1.0 - y * y))

        out._backward = backward
    return out


def gelu(a: Tensor) -> Tensor:
    """GeLU via the tanh approximation 0.5*x*(1 + tanh(c*(x + 0.044715*x^3)))."""
    x = a.data
    inner = _GELU_C * (x + _GELU_A * x**3)
    t = np.tanh(inner)
    out = _node(0.5 * x * (1.0 + t), a)
    if out.requires_grad:

        def backward():
            d_inner = _GELU_C * (1.0 + 3.0 * _GELU_A * x * x)
            local = 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * d_inner
            _accumulate(a, out.grad * local)

        out._backward = backward
    return out


# -- softmax / reductions ------------------------------------------------------


def row_softmax(a: Tensor) -> Tensor:
    """Softmax along each row, computed with row-max subtraction."""
    z = a.data - a.data.max(axis=1, keepdims=True)
    e = np.exp(z)
    y = e / e.sum(axis=1, keepdims=True)
    out = _node(y, a)
    if out.requires_grad:

        def backward():
            g = out.grad
            dot = (g * y).sum(axis=1, keepdims=True)
            _accumulate(a, y * (g - dot))

        out._backward = backward
    return out


def mean_rows(a: Tensor) -> Tensor:
    """Column-wise mean over rows; returns a 1xC row."""
    n = a.rows
    out = _node(a.data.mean(axis=0, keepdims=True), a)
    if out.requires_grad:

        def backward():
            _accumulate(a, np.repeat(out.grad / n, n, axis=0))

        out._backward = backward
    return out


def max_rows(a: Tensor) -> Tensor:
    """Column-wise max over rows; gradient routes to the first argmax per column."""
    idx = a.data.argmax(axis=0)
    out = _node(a.data.max(axis=0, keepdims=True), a)
    if out.requires_grad:

        def backward():
            g = np.zeros_like(a.data)
            g[idx, np.arange(a.cols)] = out.grad[0]
            _accumulate(a, g)

        out._backward = backward
    return out


def sum_all(a: Tensor) -> Tensor:
    """Sum of all entries as a 1x1 tensor."""
    out = _node(np.array([[a.data.sum()]]), a)
    if out.requires_grad:

        def backward():
            _accumulate(a, np.full_like(a.data, out.grad[0, 0]))

        out._backward = backward
    return out


# -- shape ops ----------------------------------------------------------------


def concat_cols(tensors: list[Tensor]) -> Tensor:
    """Concatenate tensors with equal row counts along columns."""
    if not tensors:
        raise ShapeError("concat_cols: need at least one tensor")
    rows = tensors[0].rows
    for t in tensors:
        if t.rows != rows:
            raise ShapeError(
                f"concat_cols: row counts differ, {t.shape} vs {tensors[0].shape}"
            )
    out = _node(np.concatenate([t.data for t in tensors], axis=1), *tensors)
    if out.requires_grad:
        widths = [t.cols for t in tensors]

        def backward():
            g = out.grad
            offset = 0
            for t, w in zip(tensors, widths):
                _accumulate(t, g[:, offset : offset + w])
                offset += w

        out._backward = backward
    return out


def gather_rows(a: Tensor, indices) -> Tensor:
    """Select rows of ``a`` in the given order; duplicates allowed."""
    idx = np.asarray(indices, dtype=np.int64).ravel()
    if idx.size == 0:
        raise ShapeError("gather_rows: empty index list")
    if idx.min() < 0 or idx.max() >= a.rows:
        raise IndexError(
            f"gather_rows: index out of range for {a.rows} rows: {idx.tolist()}"
        )
    out = _node(a.data[idx], a)
    if out.requires_grad:

        def backward():
            g = np.zeros_like(a.data)
            np.add.at(g, idx, out.grad)
            _accumulate(a, g)

        out._backward = backward
    return out


def transpose(a: Tensor) -> Tensor:
    out = _node(a.data.T.copy(), a)
    if out.requires_grad:

        def backward():
            _accumulate(a, out.grad.T)

        out._backward = backward
    return out


# -- normalization / regularization ---------------------------------------------


def layer_norm(a: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    """Row-wise layer normalization with learnable 1xC gain and bias."""
    if gain.shape != (1, a.cols) or bias.shape != (1, a.cols):
        raise ShapeError(
            f"layer_norm: gain/bias must be 1x{a.cols}, got {gain.shape}, {bias.shape}"
        )
    mu = a.data.mean(axis=1, keepdims=True)
    var = a.data.var(axis=1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (a.data - mu) * inv
    out = _node(xhat * gain.data + bias.data, a, gain, bias)
    if out.requires_grad:
        c = a.cols

        def backward():
            g = out.grad
            _accumulate(gain, (g * xhat).sum(axis=0, keepdims=True))
            _accumulate(bias, g.sum(axis=0, keepdims=True))
            gh = g * gain.data
            m1 = gh.mean(axis=1, keepdims=True)
            m2 = (gh * xhat).mean(axis=1, keepdims=True)
            _accumulate(a, inv * (gh - m1 - xhat * m2))

        out._backward = backward
    return out


def dropout(a: Tensor, p: float, rng: Rng, train: bool) -> Tensor:
    """Inverted dropout: keeps scale 1/(1-p) in train mode, identity in eval."""
    if not 0.0 <= p < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {p}")
    if not train or p == 0.0:
        return a
    keep = (rng.uniform_array(a.shape) >= p) / (1.0 - p)
    out = _node(a.data * keep, a)
    if out.requires_grad:

        def backward():
            _accumulate(a, out.grad * keep)

        out._backward = backward
    return out


# -- losses ---------------------------------------------------------------------


def cross_entropy(logits: Tensor, labels) -> Tensor:
    """Mean negative log-softmax of the true class for a BxC logit matrix."""
    y = np.asarray(labels, dtype=np.int64).ravel()
    if y.size != logits.rows:
        raise ShapeError(f"cross_entropy: {logits.rows} rows but {y.size} labels")
    if y.min() < 0 or y.max() >= logits.cols:
        raise IndexError(
            f"cross_entropy: label out of range [0, {logits.cols}): {y.tolist()}"
        )
    b = logits.rows
    z = logits.data - logits.data.max(axis=1, keepdims=True)
    logsumexp = np.log(np.exp(z).sum(axis=1, keepdims=True))
    logp = z - logsumexp
    loss = -logp[np.arange(b), y].mean()
    out = _node(np.array([[loss]]), logits)
    if out.requires_grad:

        def backward():
            p = np.exp(logp)
            p[np.arange(b), y] -= 1.0
            _accumulate(logits, out.grad[0, 0] * p / b)

        out._backward = backward
    return out
