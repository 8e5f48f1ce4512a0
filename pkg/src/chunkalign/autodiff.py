"""Minimal reverse-mode automatic differentiation over numpy arrays.

Every operation builds a ``Tensor`` node holding its float64 value, its
parent nodes, and a closure that pushes the output gradient back to the
parents. ``Tensor.backward`` replays those closures in reverse
topological order. Only the operations the alignment pipeline needs are
provided; everything stays in 64-bit floating point so gradients can be
checked against central finite differences.
"""

from __future__ import annotations

import numpy as np


class Tensor:
    """Array node in the computation graph."""

    __slots__ = ("value", "grad", "_parents", "_backprop")

    def __init__(self, value, parents=(), backprop=None):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = None
        self._parents = parents
        self._backprop = backprop

    @property
    def shape(self):
        return self.value.shape

    def accumulate(self, g):
        if self.grad is None:
            self.grad = np.zeros_like(self.value)
        self.grad += g

    def backward(self, seed=None):
        """Propagate gradients to every ancestor of this node.

        ``seed`` is the upstream gradient; it defaults to 1 for scalar
        outputs and must be given explicitly (matching shape) otherwise.
        """
        if seed is None:
            if self.value.ndim != 0:
                raise ValueError("backward on a non-scalar Tensor needs an explicit seed")
            seed = np.ones(())
        seed = np.asarray(seed, dtype=np.float64)
        if seed.shape != self.value.shape:
            raise ValueError(f"seed shape {seed.shape} != value shape {self.value.shape}")

        order = []
        visited = set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if id(parent) not in visited:
                    stack.append((parent, False))

        self.accumulate(seed)
        for node in reversed(order):
            if node._backprop is not None and node.grad is not None:
                node._backprop(node.grad)

    # Arithmetic operators; plain numbers and ndarrays are treated as
    # constants (no gradient flows into them).
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, negate(as_tensor(other)))

    def __rsub__(self, other):
        return add(as_tensor(other), negate(self))

    def __neg__(self):
        return negate(self)

    def __mul__(self, other):
        return multiply(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return divide(self, other)

    def __rtruediv__(self, other):
        return divide(as_tensor(other), self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __repr__(self):
        return f"Tensor(shape={self.value.shape})"


def as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def _unbroadcast(grad, shape):
    """Sum ``grad`` down to ``shape`` (the reverse of numpy broadcasting)."""
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


def add(a, b):
    a, b = as_tensor(a), as_tensor(b)
    out = Tensor(a.value + b.value, (a, b))

    def backprop(g):
        a.accumulate(_unbroadcast(g, a.value.shape))
        b.accumulate(_unbroadcast(g, b.value.shape))

    out._backprop = backprop
    return out


def negate(a):
    a = as_tensor(a)
    out = Tensor(-a.value, (a,))
    out._backprop = lambda g: a.accumulate(-g)
    return out


def multiply(a, b):
    a, b = as_tensor(a), as_tensor(b)
    out = Tensor(a.value * b.value, (a, b))

    def backprop(g):
        a.accumulate(_unbroadcast(g * b.value, a.value.shape))
        b.accumulate(_unbroadcast(g * a.value, b.value.shape))

    out._backprop = backprop
    return out


def divide(a, b):
    a, b = as_tensor(a), as_tensor(b)
    out = Tensor(a.value / b.value, (a, b))

    def backprop(g):
        a.accumulate(_unbroadcast(g / b.value, a.value.shape))
        b.accumulate(_unbroadcast(-g * a.value / (b.value * b.value), b.value.shape))

    out._backprop = backprop
    return out


def matmul(a, b):
    """Matrix product for (p,q)@(q,r) and (p,q)@(q,) operand shapes."""
    a, b = as_tensor(a), as_tensor(b)
    out = Tensor(a.value @ b.value, (a, b))
    if a.value.ndim == 2 and b.value.ndim == 2:

        def backprop(g):
            a.accumulate(g @ b.value.T)
            b.accumulate(a.value.T @ g)

    elif a.value.ndim == 2 and b.value.ndim == 1:

        def backprop(g):
            a.accumulate(g[:, None] * b.value[None, :])
            b.accumulate(a.value.T @ g)

    else:
        raise ValueError(f"unsupported matmul shapes {a.value.shape} @ {b.value.shape}")
    out._backprop = backprop
    return out


def tanh(a):
    a = as_tensor(a)
    out = Tensor(np.tanh(a.value), (a,))
    out._backprop = lambda g: a.accumulate(g * (1.0 - out.value * out.value))
    return out


def sigmoid(a):
    a = as_tensor(a)
    x = a.value
    val = np.where(x >= 0, 1.0 / (1.0 + np.exp(-np.abs(x))), np.exp(-np.abs(x)) / (1.0 + np.exp(-np.abs(x))))
    out = Tensor(val, (a,))
    out._backprop = lambda g: a.accumulate(g * out.value * (1.0 - out.value))
    return out


def exp(a):
    a = as_tensor(a)
    out = Tensor(np.exp(a.value), (a,))
    out._backprop = lambda g: a.accumulate(g * out.value)
    return out


def log(a):
    a = as_tensor(a)
    out = Tensor(np.log(a.value), (a,))
    out._backprop = lambda g: a.accumulate(g / a.value)
    return out


def clamp_min(a, floor):
    """Elementwise max with a constant; gradient passes where a >= floor."""
    a = as_tensor(a)
    out = Tensor(np.maximum(a.value, floor), (a,))
    mask = (a.value >= floor).astype(np.float64)
    out._backprop = lambda g: a.accumulate(g * mask)
    return out


def tsum(a, axis=None, keepdims=False):
    a = as_tensor(a)
    out = Tensor(a.value.sum(axis=axis, keepdims=keepdims), (a,))

    def backprop(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        a.accumulate(np.broadcast_to(g, a.value.shape).copy())

    out._backprop = backprop
    return out


def _extreme(a, axis, keepdims, argfn, redfn):
    a = as_tensor(a)
    out = Tensor(redfn(a.value, axis=axis, keepdims=keepdims), (a,))
    idx = argfn(a.value, axis=axis)
    mask = np.zeros_like(a.value)
    np.put_along_axis(mask, np.expand_dims(idx, axis), 1.0, axis=axis)

    def backprop(g):
        if not keepdims:
            g = np.expand_dims(g, axis)
        a.accumulate(mask * g)

    out._backprop = backprop
    return out


def tmax(a, axis, keepdims=False):
    """Max along an axis; the gradient routes to the first maximizer."""
    return _extreme(a, axis, keepdims, np.argmax, np.max)


def tmin(a, axis, keepdims=False):
    """Min along an axis; the gradient routes to the first minimizer."""
    return _extreme(a, axis, keepdims, np.argmin, np.min)


def concat(parts, axis):
    parts = [as_tensor(p) for p in parts]
    out = Tensor(np.concatenate([p.value for p in parts], axis=axis), tuple(parts))
    sizes = [p.value.shape[axis] for p in parts]
    splits = np.cumsum(sizes)[:-1]

    def backprop(g):
        for part, piece in zip(parts, np.split(g, splits, axis=axis)):
            part.accumulate(piece)

    out._backprop = backprop
    return out


def reshape(a, shape):
    a = as_tensor(a)
    out = Tensor(a.value.reshape(shape), (a,))
    out._backprop = lambda g: a.accumulate(g.reshape(a.value.shape))
    return out


def transpose(a):
    a = as_tensor(a)
    out = Tensor(a.value.T, (a,))
    out._backprop = lambda g: a.accumulate(g.T)
    return out
