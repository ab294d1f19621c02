"""Minimal reverse-mode automatic differentiation over numpy arrays.

Just enough tape machinery for the pointer model: dense linear maps, LSTM
gate arithmetic, masked attention softmaxes, and the index/shape plumbing
needed to run a whole mini-batch through one graph. Gradient accumulation
order is fixed by the topological order of the tape, so training is
bit-reproducible.
"""

from __future__ import annotations

from contextlib import contextmanager

import numpy as np

_grad_enabled = True


@contextmanager
def no_grad():
    """Disable tape recording (inference / finite-difference evaluations)."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


class Tensor:
    __slots__ = ("value", "grad", "requires_grad", "_parents", "_bw")

    def __init__(self, value, requires_grad: bool = False):
        self.value = np.asarray(value)
        self.requires_grad = requires_grad
        self.grad = None
        self._parents: tuple[Tensor, ...] = ()
        self._bw = None

    @property
    def shape(self):
        return self.value.shape

    @property
    def dtype(self):
        return self.value.dtype

    def backward(self) -> None:
        """Backpropagate from a scalar output; accumulates into ``.grad``."""
        if self.value.size != 1:
            raise ValueError("backward() requires a scalar output")
        topo: list[Tensor] = []
        visited: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                topo.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if p.requires_grad and id(p) not in visited:
                    stack.append((p, False))
        self.grad = np.ones_like(self.value)
        for node in reversed(topo):
            if node._bw is None:
                continue
            for parent, g in zip(node._parents, node._bw(node.grad)):
                if g is None or not parent.requires_grad:
                    continue
                parent.grad = g if parent.grad is None else parent.grad + g


def constant(value, dtype=None) -> Tensor:
    return Tensor(np.asarray(value, dtype=dtype), requires_grad=False)


def parameter(value) -> Tensor:
    return Tensor(np.asarray(value), requires_grad=True)


def _node(value: np.ndarray, parents: tuple[Tensor, ...], bw) -> Tensor:
    record = _grad_enabled and any(p.requires_grad for p in parents)
    out = Tensor(value, requires_grad=record)
    if record:
        out._parents = parents
        out._bw = bw
    return out


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a broadcasted gradient back down to ``shape``."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def add(a: Tensor, b: Tensor) -> Tensor:
    value = a.value + b.value
    return _node(value, (a, b), lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)))


def mul(a: Tensor, b: Tensor) -> Tensor:
    value = a.value * b.value
    return _node(
        value,
        (a, b),
        lambda g: (_unbroadcast(g * b.value, a.shape), _unbroadcast(g * a.value, b.shape)),
    )


def neg(a: Tensor) -> Tensor:
    return _node(-a.value, (a,), lambda g: (-g,))


def scale(a: Tensor, s: float) -> Tensor:
    return _node(a.value * s, (a,), lambda g: (g * s,))


def linear(x: Tensor, w: Tensor, b: Tensor | None = None) -> Tensor:
    """x @ w.T (+ b); the layout every weight matrix in the model uses."""
    value = x.value @ w.value.T
    if b is not None:
        value = value + b.value

    def bw(g):
        gb = g.sum(axis=0) if b is not None else None
        return g @ w.value, g.T @ x.value, gb

    parents = (x, w) if b is None else (x, w, b)
    return _node(value, parents, (lambda g: bw(g)[:2]) if b is None else bw)


def matvec(a: Tensor, v: Tensor) -> Tensor:
    """(m, d) @ (d,) -> (m,)."""
    value = a.value @ v.value
    return _node(value, (a, v), lambda g: (np.outer(g, v.value), a.value.T @ g))


def tanh(a: Tensor) -> Tensor:
    t = np.tanh(a.value)
    return _node(t, (a,), lambda g: (g * (1.0 - t * t),))


def sigmoid(a: Tensor) -> Tensor:
    x = a.value
    e = np.exp(-np.abs(x))  # overflow-safe for either sign
    s = np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))

    def bw(g):
        return (g * s * (1.0 - s),)

    return _node(s, (a,), bw)


def slice_cols(a: Tensor, j0: int, j1: int) -> Tensor:
    value = a.value[:, j0:j1]

    def bw(g):
        z = np.zeros_like(a.value)
        z[:, j0:j1] = g
        return (z,)

    return _node(value, (a,), bw)


def gather_rows(a: Tensor, idx: np.ndarray) -> Tensor:
    idx = np.asarray(idx, dtype=np.intp)
    value = a.value[idx]

    def bw(g):
        z = np.zeros_like(a.value)
        np.add.at(z, idx, g)
        return (z,)

    return _node(value, (a,), bw)


def repeat_rows(a: Tensor, k: int) -> Tensor:
    """Repeat each row k consecutive times: (m, d) -> (m*k, d)."""
    value = np.repeat(a.value, k, axis=0)

    def bw(g):
        return (g.reshape(a.shape[0], k, -1).sum(axis=1),)

    return _node(value, (a,), bw)


def interleave_steps(tensors: list[Tensor]) -> Tensor:
    """Stack per-step (B, d) tensors into (B*T, d), instance-major."""
    T = len(tensors)
    B, d = tensors[0].shape
    value = np.stack([t.value for t in tensors], axis=1).reshape(B * T, d)

    def bw(g):
        g3 = g.reshape(B, T, d)
        return tuple(g3[:, t, :] for t in range(T))

    return _node(value, tuple(tensors), bw)


def reshape(a: Tensor, shape: tuple[int, ...]) -> Tensor:
    value = a.value.reshape(shape)
    return _node(value, (a,), lambda g: (g.reshape(a.shape),))


def conv1d_embed(taps: list[np.ndarray], kernel: Tensor, bias: Tensor) -> Tensor:
    """Same-padded 1-D convolution along the city axis, precomputed taps.

    ``taps[t]`` is the zero-shifted input (rows, in_ch) for kernel tap t;
    ``kernel`` is (out_ch, in_ch, k). Returns (rows, out_ch).
    """
    k = kernel.shape[2]
    value = np.zeros((taps[0].shape[0], kernel.shape[0]), dtype=kernel.dtype)
    for t in range(k):
        value += taps[t] @ kernel.value[:, :, t].T
    value += bias.value

    def bw(g):
        gk = np.stack([g.T @ taps[t] for t in range(k)], axis=2)
        return gk, g.sum(axis=0)

    return _node(value, (kernel, bias), bw)


def masked_log_softmax(u: Tensor, selectable: np.ndarray) -> Tensor:
    """Row-wise log-softmax over selectable entries; others get -inf."""
    x = u.value
    neg = np.where(selectable, x, -np.inf)
    mx = np.max(neg, axis=1, keepdims=True)
    z = neg - mx
    e = np.exp(z)
    s = e.sum(axis=1, keepdims=True)
    logp = z - np.log(s)
    p = e / s

    def bw(g):
        gu = g - p * g.sum(axis=1, keepdims=True)
        return (np.where(selectable, gu, 0.0),)

    return _node(logp, (u,), bw)


def masked_softmax(u: Tensor, selectable: np.ndarray) -> Tensor:
    """Row-wise softmax over selectable entries; masked entries are exactly 0."""
    x = u.value
    neg = np.where(selectable, x, -np.inf)
    mx = np.max(neg, axis=1, keepdims=True)
    e = np.exp(neg - mx)
    p = e / e.sum(axis=1, keepdims=True)

    def bw(g):
        dot = (g * p).sum(axis=1, keepdims=True)
        return (p * (g - dot),)

    return _node(p, (u,), bw)


def rows_mix(p: Tensor, refs: Tensor, n: int) -> Tensor:
    """Attention-weighted sum of reference rows.

    p is (B, n); refs is (B*n, d) instance-major. Returns (B, d).
    """
    B = p.shape[0]
    d = refs.shape[1]
    refs3 = refs.value.reshape(B, n, d)

    value = np.einsum("bt,btd->bd", p.value, refs3)

    def bw(g):
        gp = np.einsum("bd,btd->bt", g, refs3)
        grefs = (p.value[:, :, None] * g[:, None, :]).reshape(B * n, d)
        return gp, grefs

    return _node(value, (p, refs), bw)


def pick(a: Tensor, idx: np.ndarray) -> Tensor:
    """Select one column per row: (B, n), (B,) -> (B,)."""
    idx = np.asarray(idx, dtype=np.intp)
    rows = np.arange(a.shape[0])
    value = a.value[rows, idx]

    def bw(g):
        z = np.zeros_like(a.value)
        z[rows, idx] = g
        return (z,)

    return _node(value, (a,), bw)


def sum_all(a: Tensor) -> Tensor:
    value = np.asarray(a.value.sum(), dtype=a.dtype)
    return _node(value, (a,), lambda g: (np.full_like(a.value, g),))
