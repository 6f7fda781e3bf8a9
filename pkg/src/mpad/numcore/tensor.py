"""Dense float64 matrices on a reverse-mode differentiation tape.

Every value is a 2-D matrix; row/column vectors are 1xN / Nx1. While a
``Tape`` is active (as a context manager), each primitive records the
backward rule of its output in execution order. ``Tape.backward`` walks
the records in exact reverse order and accumulates gradients into every
tensor that requires them.

Forward outputs are checked for NaN/Inf; a non-finite value raises
``NonFiniteError`` at the producing operation.
"""

from __future__ import annotations

from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.special import expit


class NonFiniteError(ArithmeticError):
    """A forward operation produced NaN or Inf."""


class Tensor:
    """A (rows, cols) matrix of 64-bit reals, optionally carrying a gradient."""

    __slots__ = ("data", "grad", "requires_grad", "node_id")

    def __init__(self, data, requires_grad: bool = False):
        arr = np.asarray(data, dtype=np.float64)
        if arr.ndim == 0:
            arr = arr.reshape(1, 1)
        elif arr.ndim == 1:
            arr = arr.reshape(1, -1)
        if arr.ndim != 2:
            raise ValueError(f"tensors are 2-D matrices, got shape {arr.shape}")
        self.data = arr
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        # Index of the producing record on the active tape, if any.
        self.node_id: int | None = None

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def item(self) -> float:
        if self.data.size != 1:
            raise ValueError(f"item() needs a 1x1 tensor, got {self.shape}")
        return float(self.data[0, 0])

    def zero_grad(self) -> None:
        self.grad = np.zeros_like(self.data)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"

    # Operator sugar; the named functions below are the primitives.
    def __add__(self, other: "Tensor") -> "Tensor":
        return add(self, other)

    def __sub__(self, other: "Tensor") -> "Tensor":
        return sub(self, other)

    def __mul__(self, other: "Tensor") -> "Tensor":
        return mul(self, other)

    def __matmul__(self, other: "Tensor") -> "Tensor":
        return matmul(self, other)


_TAPE_STACK: list["Tape"] = []


def _active_tape() -> "Tape | None":
    return _TAPE_STACK[-1] if _TAPE_STACK else None


class Tape:
    """Ordered record of primitive operations.

    Records are appended in execution order, which is by construction a
    topological order of the computation; ``backward`` replays them in
    exact reverse order.
    """

    def __init__(self):
        self._records: list[tuple[Tensor, Callable[[np.ndarray], None]]] = []

    def __enter__(self) -> "Tape":
        _TAPE_STACK.append(self)
        return self

    def __exit__(self, exc_type, exc, tb) -> bool:
        _TAPE_STACK.pop()
        return False

    def __len__(self) -> int:
        return len(self._records)

    def _record(self, out: Tensor, backward: Callable[[np.ndarray], None]) -> None:
        out.node_id = len(self._records)
        out.requires_grad = True
        self._records.append((out, backward))

    def owns(self, t: Tensor) -> bool:
        nid = t.node_id
        return nid is not None and nid < len(self._records) and self._records[nid][0] is t

    def backward(self, loss: Tensor, parameters: Iterable[Tensor] = ()) -> None:
        """Accumulate d(loss)/d(t) into ``t.grad`` for every recorded tensor.

        ``loss`` must be a 1x1 tensor recorded on this tape. Parameters
        passed in ``parameters`` that the loss does not reach are given
        zero gradients.
        """
        if not self.owns(loss):
            raise ValueError("loss tensor is not recorded on this tape")
        if loss.shape != (1, 1):
            raise ValueError(f"loss must be a 1x1 tensor, got {loss.shape}")
        loss.grad = np.ones((1, 1))
        for out, backward in reversed(self._records[: loss.node_id + 1]):
            if out.grad is not None:
                backward(out.grad)
        for p in parameters:
            if p.grad is None:
                p.zero_grad()


def _accumulate(t: Tensor, g: np.ndarray) -> None:
    if t.grad is None:
        t.grad = np.array(g)
    else:
        t.grad += g


def _make(name: str, data: np.ndarray, inputs: Sequence[Tensor],
          backward: Callable[[np.ndarray], None]) -> Tensor:
    if not np.isfinite(data).all():
        raise NonFiniteError(f"non-finite values in the output of {name}")
    out = Tensor(data)
    tape = _active_tape()
    if tape is not None and any(t.requires_grad for t in inputs):
        tape._record(out, backward)
    return out


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"matmul shape mismatch: {a.shape} @ {b.shape}")

    def backward(g: np.ndarray) -> None:
        if a.requires_grad:
            _accumulate(a, g @ b.data.T)
        if b.requires_grad:
            _accumulate(b, a.data.T @ g)

    return _make("matmul", a.data @ b.data, (a, b), backward)


def add(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise sum; ``b`` may be a 1xC row broadcast over the rows of ``a``."""
    broadcast = a.shape != b.shape
    if broadcast and b.shape != (1, a.shape[1]):
        raise ValueError(f"add shape mismatch: {a.shape} + {b.shape}")

    def backward(g: np.ndarray) -> None:
        if a.requires_grad:
            _accumulate(a, g)
        if b.requires_grad:
            _accumulate(b, g.sum(axis=0, keepdims=True) if broadcast else g)

    return _make("add", a.data + b.data, (a, b), backward)


def sub(a: Tensor, b: Tensor) -> Tensor:
    if a.shape != b.shape:
        raise ValueError(f"sub shape mismatch: {a.shape} - {b.shape}")

    def backward(g: np.ndarray) -> None:
        if a.requires_grad:
            _accumulate(a, g)
        if b.requires_grad:
            _accumulate(b, -g)

    return _make("sub", a.data - b.data, (a, b), backward)


def mul(a: Tensor, b: Tensor) -> Tensor:
    if a.shape != b.shape:
        raise ValueError(f"mul shape mismatch: {a.shape} * {b.shape}")

    def backward(g: np.ndarray) -> None:
        if a.requires_grad:
            _accumulate(a, g * b.data)
        if b.requires_grad:
            _accumulate(b, g * a.data)

    return _make("mul", a.data * b.data, (a, b), backward)


def scale(a: Tensor, factor: float) -> Tensor:
    factor = float(factor)

    def backward(g: np.ndarray) -> None:
        if a.requires_grad:
            _accumulate(a, g * factor)

    return _make("scale", a.data * factor, (a,), backward)


def one_minus(a: Tensor) -> Tensor:
    def backward(g: np.ndarray) -> None:
        if a.requires_grad:
            _accumulate(a, -g)

    return _make("one_minus", 1.0 - a.data, (a,), backward)


def sigmoid(a: Tensor) -> Tensor:
    y = expit(a.data)

    def backward(g: np.ndarray) -> None:
        if a.requires_grad:
            _accumulate(a, g * y * (1.0 - y))

    return _make("sigmoid", y, (a,), backward)


def tanh(a: Tensor) -> Tensor:
    y = np.tanh(a.data)

    def backward(g: np.ndarray) -> None:
        if a.requires_grad:
            _accumulate(a, g * (1.0 - y * y))

    return _make("tanh", y, (a,), backward)


def relu(a: Tensor) -> Tensor:
    mask = a.data > 0

    def backward(g: np.ndarray) -> None:
        if a.requires_grad:
            _accumulate(a, g * mask)

    return _make("relu", np.where(mask, a.data, 0.0), (a,), backward)


def row_softmax(a: Tensor) -> Tensor:
    shifted = a.data - a.data.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    p = e / e.sum(axis=1, keepdims=True)

    def backward(g: np.ndarray) -> None:
        if a.requires_grad:
            inner = (g * p).sum(axis=1, keepdims=True)
            _accumulate(a, p * (g - inner))

    return _make("row_softmax", p, (a,), backward)


def transpose(a: Tensor) -> Tensor:
    def backward(g: np.ndarray) -> None:
        if a.requires_grad:
            _accumulate(a, g.T)

    return _make("transpose", a.data.T.copy(), (a,), backward)


def row_slice(a: Tensor, start: int, stop: int) -> Tensor:
    n = a.shape[0]
    if not (0 <= start < stop <= n):
        raise ValueError(f"row_slice [{start}:{stop}] out of range for {a.shape}")

    def backward(g: np.ndarray) -> None:
        if a.requires_grad:
            full = np.zeros_like(a.data)
            full[start:stop] = g
            _accumulate(a, full)

    return _make("row_slice", a.data[start:stop].copy(), (a,), backward)


def concat_rows(parts: Sequence[Tensor]) -> Tensor:
    if not parts:
        raise ValueError("concat_rows needs at least one tensor")
    cols = parts[0].shape[1]
    for p in parts:
        if p.shape[1] != cols:
            raise ValueError(f"concat_rows column mismatch: {p.shape} vs {parts[0].shape}")
    offsets = np.cumsum([0] + [p.shape[0] for p in parts])

    def backward(g: np.ndarray) -> None:
        for p, lo, hi in zip(parts, offsets[:-1], offsets[1:]):
            if p.requires_grad:
                _accumulate(p, g[lo:hi])

    return _make("concat_rows", np.concatenate([p.data for p in parts], axis=0),
                 tuple(parts), backward)


def concat_cols(parts: Sequence[Tensor]) -> Tensor:
    if not parts:
        raise ValueError("concat_cols needs at least one tensor")
    rows = parts[0].shape[0]
    for p in parts:
        if p.shape[0] != rows:
            raise ValueError(f"concat_cols row mismatch: {p.shape} vs {parts[0].shape}")
    offsets = np.cumsum([0] + [p.shape[1] for p in parts])

    def backward(g: np.ndarray) -> None:
        for p, lo, hi in zip(parts, offsets[:-1], offsets[1:]):
            if p.requires_grad:
                _accumulate(p, g[:, lo:hi])

    return _make("concat_cols", np.concatenate([p.data for p in parts], axis=1),
                 tuple(parts), backward)


def mean_rows(a: Tensor) -> Tensor:
    n = a.shape[0]

    def backward(g: np.ndarray) -> None:
        if a.requires_grad:
            _accumulate(a, np.repeat(g / n, n, axis=0))

    return _make("mean_rows", a.data.mean(axis=0, keepdims=True), (a,), backward)


def weighted_sum_rows(weights: Tensor, a: Tensor) -> Tensor:
    """Sum of the rows of ``a`` weighted by the 1xN row ``weights``."""
    if weights.shape != (1, a.shape[0]):
        raise ValueError(f"weighted_sum_rows shape mismatch: {weights.shape} with {a.shape}")

    def backward(g: np.ndarray) -> None:
        if weights.requires_grad:
            _accumulate(weights, g @ a.data.T)
        if a.requires_grad:
            _accumulate(a, weights.data.T @ g)

    return _make("weighted_sum_rows", weights.data @ a.data, (weights, a), backward)


def sum_all(a: Tensor) -> Tensor:
    def backward(g: np.ndarray) -> None:
        if a.requires_grad:
            _accumulate(a, np.full_like(a.data, g[0, 0]))

    return _make("sum_all", np.array([[a.data.sum()]]), (a,), backward)


def linear(x: Tensor, weight: Tensor, bias: Tensor) -> Tensor:
    """Fused dense layer: ``x @ weight + bias`` with a 1xC bias row."""
    if x.shape[1] != weight.shape[0]:
        raise ValueError(f"linear shape mismatch: {x.shape} @ {weight.shape}")
    if bias.shape != (1, weight.shape[1]):
        raise ValueError(f"linear bias shape mismatch: {bias.shape} for {weight.shape}")

    def backward(g: np.ndarray) -> None:
        if x.requires_grad:
            _accumulate(x, g @ weight.data.T)
        if weight.requires_grad:
            _accumulate(weight, x.data.T @ g)
        if bias.requires_grad:
            _accumulate(bias, g.sum(axis=0, keepdims=True))

    return _make("linear", x.data @ weight.data + bias.data, (x, weight, bias), backward)


def linear2(x1: Tensor, w1: Tensor, x2: Tensor, w2: Tensor, bias: Tensor) -> Tensor:
    """Fused two-input pre-activation: ``x1 @ w1 + x2 @ w2 + bias``."""
    if x1.shape[1] != w1.shape[0]:
        raise ValueError(f"linear2 shape mismatch: {x1.shape} @ {w1.shape}")
    if x2.shape[1] != w2.shape[0]:
        raise ValueError(f"linear2 shape mismatch: {x2.shape} @ {w2.shape}")
    if w1.shape[1] != w2.shape[1] or x1.shape[0] != x2.shape[0]:
        raise ValueError(
            f"linear2 output mismatch: {x1.shape}@{w1.shape} vs {x2.shape}@{w2.shape}")
    if bias.shape != (1, w1.shape[1]):
        raise ValueError(f"linear2 bias shape mismatch: {bias.shape}")

    def backward(g: np.ndarray) -> None:
        if x1.requires_grad:
            _accumulate(x1, g @ w1.data.T)
        if w1.requires_grad:
            _accumulate(w1, x1.data.T @ g)
        if x2.requires_grad:
            _accumulate(x2, g @ w2.data.T)
        if w2.requires_grad:
            _accumulate(w2, x2.data.T @ g)
        if bias.requires_grad:
            _accumulate(bias, g.sum(axis=0, keepdims=True))

    data = (x1.data @ w1.data + x2.data @ w2.data) + bias.data
    return _make("linear2", data, (x1, w1, x2, w2, bias), backward)


def cross_entropy(logits: Tensor, labels: np.ndarray) -> Tensor:
    """Mean negative log-likelihood of ``labels`` under row-softmax of ``logits``.

    ``labels`` is a length-B integer vector for B x C ``logits``.
    """
    labels = np.asarray(labels)
    n, c = logits.shape
    if labels.shape != (n,):
        raise ValueError(f"cross_entropy labels shape {labels.shape} for logits {logits.shape}")
    if labels.min() < 0 or labels.max() >= c:
        raise ValueError(f"cross_entropy labels out of range for {c} classes")
    shifted = logits.data - logits.data.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    log_p = shifted - log_z
    loss = -log_p[np.arange(n), labels].mean()

    def backward(g: np.ndarray) -> None:
        if logits.requires_grad:
            grad = np.exp(log_p)
            grad[np.arange(n), labels] -= 1.0
            _accumulate(logits, grad * (g[0, 0] / n))

    return _make("cross_entropy", np.array([[loss]]), (logits,), backward)
