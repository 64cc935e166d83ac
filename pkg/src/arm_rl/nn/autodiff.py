"""Reverse-mode automatic differentiation over numpy arrays.

A :class:`Tape` records every operation applied to tensors that live on it.
:func:`backward` replays the record once, in reverse, and returns the gradient of
each named leaf.  Operations on tensors without a tape just compute values.
"""

from __future__ import annotations

import numpy as np


class TapeConsumedError(RuntimeError):
    pass


class Tensor:
    __slots__ = ("value", "tape", "node")

    def __init__(self, value, tape: "Tape | None" = None, node: int = -1):
        self.value = np.asarray(value, dtype=np.float64)
        self.tape = tape
        self.node = node

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, neg(as_tensor(other)))

    def __rsub__(self, other):
        return add(as_tensor(other), neg(self))

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return neg(self)

    def __repr__(self):
        return f"Tensor(shape={self.shape})"


class Tape:
    """Record of one forward pass.  Single use: a second backward raises."""

    def __init__(self):
        self._nodes: list[tuple[tuple[int, ...], object]] = []
        self._leaves: dict[str, int] = {}
        self._shapes: list[tuple[int, ...]] = []
        self.consumed = False

    def leaf(self, value, name: str) -> Tensor:
        if name in self._leaves:
            raise ValueError(f"duplicate leaf name {name!r}")
        t = self._push(np.asarray(value, dtype=np.float64), (), None)
        self._leaves[name] = t.node
        return t

    def _push(self, value, parents, vjp) -> Tensor:
        if self.consumed:
            raise TapeConsumedError("tape already consumed by backward()")
        self._nodes.append((parents, vjp))
        self._shapes.append(value.shape)
        return Tensor(value, self, len(self._nodes) - 1)

    def __len__(self):
        return len(self._nodes)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _record(value, inputs: tuple[Tensor, ...], vjp) -> Tensor:
    """Wrap an op result, recording it if any input lives on a tape.

    ``vjp(g)`` returns one gradient (or None) per input.
    """
    tape = None
    for t in inputs:
        if t.tape is not None:
            if tape is not None and t.tape is not tape:
                raise ValueError("tensors from different tapes cannot be combined")
            tape = t.tape
    if tape is None:
        return Tensor(value)
    parents = tuple(t.node if t.tape is tape else -1 for t in inputs)
    return tape._push(np.asarray(value, dtype=np.float64), parents, vjp)


def backward(tape: Tape, output: Tensor, output_grad=None) -> dict[str, np.ndarray]:
    """Gradients of ``sum(output * output_grad)`` with respect to every leaf."""
    if tape.consumed:
        raise TapeConsumedError("tape already consumed by backward()")
    if output.tape is not tape:
        raise ValueError("output was not recorded on this tape")
    tape.consumed = True
    g0 = np.ones_like(output.value) if output_grad is None else np.asarray(output_grad, dtype=np.float64)
    if g0.shape != output.value.shape:
        raise ValueError(f"output_grad shape {g0.shape} != output shape {output.value.shape}")
    grads: list = [None] * len(tape._nodes)
    grads[output.node] = g0
    for i in range(output.node, -1, -1):
        g = grads[i]
        parents, vjp = tape._nodes[i]
        if g is None or vjp is None:
            continue
        for p, gp in zip(parents, vjp(g)):
            if p < 0 or gp is None:
                continue
            grads[p] = gp if grads[p] is None else grads[p] + gp
    out = {}
    for name, idx in tape._leaves.items():
        g = grads[idx]
        out[name] = np.zeros(tape._shapes[idx]) if g is None else g
    tape._nodes.clear()
    return out


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


# --------------------------------------------------------------------------- elementwise

def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    sa, sb = a.shape, b.shape
    return _record(a.value + b.value, (a, b), lambda g: (_unbroadcast(g, sa), _unbroadcast(g, sb)))


def neg(a: Tensor) -> Tensor:
    return _record(-a.value, (a,), lambda g: (-g,))


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    av, bv = a.value, b.value
    return _record(
        av * bv, (a, b), lambda g: (_unbroadcast(g * bv, av.shape), _unbroadcast(g * av, bv.shape))
    )


def square(a: Tensor) -> Tensor:
    av = a.value
    return _record(av * av, (a,), lambda g: (2.0 * av * g,))


def exp(a: Tensor) -> Tensor:
    out = np.exp(a.value)
    return _record(out, (a,), lambda g: (g * out,))


def relu(a: Tensor) -> Tensor:
    on = a.value > 0
    return _record(np.where(on, a.value, 0.0), (a,), lambda g: (g * on,))


def tanh(a: Tensor) -> Tensor:
    out = np.tanh(a.value)
    return _record(out, (a,), lambda g: (g * (1.0 - out * out),))


def clip(a: Tensor, lo: float, hi: float) -> Tensor:
    inside = (a.value >= lo) & (a.value <= hi)
    return _record(np.clip(a.value, lo, hi), (a,), lambda g: (g * inside,))


def minimum(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise min; ties send the gradient to ``a``."""
    a, b = as_tensor(a), as_tensor(b)
    pick_a = a.value <= b.value
    return _record(
        np.where(pick_a, a.value, b.value),
        (a, b),
        lambda g: (_unbroadcast(g * pick_a, a.shape), _unbroadcast(g * ~pick_a, b.shape)),
    )


# --------------------------------------------------------------------------- reductions / shape

def sum_(a: Tensor, axis=None) -> Tensor:
    shape = a.shape

    def vjp(g):
        if axis is not None:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, shape).copy(),)

    return _record(a.value.sum(axis=axis), (a,), vjp)


def mean(a: Tensor, axis=None) -> Tensor:
    n = a.value.size if axis is None else a.shape[axis]
    return mul(sum_(a, axis), 1.0 / n)


def reshape(a: Tensor, shape) -> Tensor:
    old = a.shape
    return _record(a.value.reshape(shape), (a,), lambda g: (g.reshape(old),))


def take_along(a: Tensor, idx: np.ndarray) -> Tensor:
    """``a[i, idx[i]]`` for a 2-D tensor: picks one column per row."""
    idx = np.asarray(idx, dtype=np.int64)
    rows = np.arange(a.shape[0])

    def vjp(g):
        out = np.zeros(a.shape)
        out[rows, idx] = g
        return (out,)

    return _record(a.value[rows, idx], (a,), vjp)


# --------------------------------------------------------------------------- layers

def dense(x: Tensor, W: Tensor, b: Tensor) -> Tensor:
    """``x @ W + b`` for ``x`` of shape (N, in) and ``W`` of shape (in, out)."""
    xv, Wv = x.value, W.value
    return _record(
        xv @ Wv + b.value,
        (x, W, b),
        lambda g: (g @ Wv.T, xv.T @ g, g.sum(axis=0)),
    )


def conv2d(x: Tensor, W: Tensor, b: Tensor, stride: int = 1) -> Tensor:
    """Valid 2-D convolution, NHWC input, filters of shape (F, C, k, k)."""
    xv, Wv = x.value, W.value
    n, h, w, c = xv.shape
    f, wc, k, k2 = Wv.shape
    if wc != c or k != k2:
        raise ValueError(f"filter shape {Wv.shape} does not fit input channels {c}")
    oh, ow = (h - k) // stride + 1, (w - k) // stride + 1
    if oh < 1 or ow < 1:
        raise ValueError(f"input {h}x{w} smaller than kernel {k}")
    win = np.lib.stride_tricks.sliding_window_view(xv, (k, k), axis=(1, 2))
    cols = win[:, : (oh - 1) * stride + 1 : stride, : (ow - 1) * stride + 1 : stride]
    cols = cols.reshape(n * oh * ow, c * k * k)  # copies; order (C, k, k) matches W
    Wm = Wv.reshape(f, c * k * k)
    out = (cols @ Wm.T + b.value).reshape(n, oh, ow, f)

    def vjp(g):
        gm = g.reshape(n * oh * ow, f)
        dW = (gm.T @ cols).reshape(Wv.shape)
        dcols = (gm @ Wm).reshape(n, oh, ow, c, k, k)
        dx = np.zeros_like(xv)
        for i in range(k):
            for j in range(k):
                dx[:, i : i + stride * oh : stride, j : j + stride * ow : stride, :] += dcols[..., i, j]
        return dx, dW, gm.sum(axis=0)

    return _record(out, (x, W, b), vjp)


def log_softmax(a: Tensor) -> Tensor:
    z = a.value - a.value.max(axis=-1, keepdims=True)
    out = z - np.log(np.exp(z).sum(axis=-1, keepdims=True))
    p = np.exp(out)
    return _record(out, (a,), lambda g: (g - p * g.sum(axis=-1, keepdims=True),))


def softmax(a: Tensor) -> Tensor:
    return exp(log_softmax(a))


def softmax_cross_entropy(logits: Tensor, labels) -> Tensor:
    """Mean cross-entropy of integer ``labels`` under ``softmax(logits)``, fused."""
    labels = np.asarray(labels, dtype=np.int64)
    n = logits.shape[0]
    z = logits.value - logits.value.max(axis=-1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=-1, keepdims=True))
    rows = np.arange(n)
    loss = -logp[rows, labels].mean()

    def vjp(g):
        d = np.exp(logp)
        d[rows, labels] -= 1.0
        return (d * (g / n),)

    return _record(loss, (logits,), vjp)
