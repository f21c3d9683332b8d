"""A small reverse-mode autodiff engine over numpy float64 arrays.

Every operation the encoder and its losses need, and nothing more. Each
op builds the output array eagerly and records a closure that scatters
the output gradient back to its inputs; ``backward()`` runs the closures
in reverse topological order. Broadcasting follows numpy; gradients are
summed back over broadcast axes.
"""

from __future__ import annotations

import numpy as np


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Reduce ``grad`` back to ``shape`` by summing the axes numpy
    broadcasting expanded."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


class Tensor:
    """Node in the computation graph; wraps a float64 ndarray."""

    def __init__(self, data, _children=()):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self._backward = lambda: None
        self._prev = tuple(_children)

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self):
        return "Tensor(shape=%r)" % (self.data.shape,)

    # -- arithmetic --------------------------------------------------------

    def __add__(self, other):
        other = other if isinstance(other, Tensor) else Tensor(other)
        out = Tensor(self.data + other.data, (self, other))

        def _backward():
            self.grad += _unbroadcast(out.grad, self.data.shape)
            other.grad += _unbroadcast(out.grad, other.data.shape)

        out._backward = _backward
        return out

    def __mul__(self, other):
        other = other if isinstance(other, Tensor) else Tensor(other)
        out = Tensor(self.data * other.data, (self, other))

        def _backward():
            self.grad += _unbroadcast(out.grad * other.data, self.data.shape)
            other.grad += _unbroadcast(out.grad * self.data, other.data.shape)

        out._backward = _backward
        return out

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        other = other if isinstance(other, Tensor) else Tensor(other)
        return self + (-other)

    def __truediv__(self, other):
        other = other if isinstance(other, Tensor) else Tensor(other)
        out = Tensor(self.data / other.data, (self, other))

        def _backward():
            self.grad += _unbroadcast(out.grad / other.data, self.data.shape)
            other.grad += _unbroadcast(
                -out.grad * self.data / (other.data * other.data), other.data.shape
            )

        out._backward = _backward
        return out

    def __radd__(self, other):
        return self + other

    def __rmul__(self, other):
        return self * other

    def __rsub__(self, other):
        return Tensor(other) + (-self)

    def __matmul__(self, other):
        other = other if isinstance(other, Tensor) else Tensor(other)
        out = Tensor(self.data @ other.data, (self, other))

        def _backward():
            self.grad += out.grad @ other.data.T
            other.grad += self.data.T @ out.grad

        out._backward = _backward
        return out

    @property
    def T(self):
        out = Tensor(self.data.T, (self,))

        def _backward():
            self.grad += out.grad.T

        out._backward = _backward
        return out

    # -- elementwise nonlinearities ----------------------------------------

    def exp(self):
        out = Tensor(np.exp(self.data), (self,))

        def _backward():
            self.grad += out.grad * out.data

        out._backward = _backward
        return out

    def log(self):
        out = Tensor(np.log(self.data), (self,))

        def _backward():
            self.grad += out.grad / self.data

        out._backward = _backward
        return out

    def sigmoid(self):
        s = 1.0 / (1.0 + np.exp(-self.data))
        out = Tensor(s, (self,))

        def _backward():
            self.grad += out.grad * s * (1.0 - s)

        out._backward = _backward
        return out

    def leaky_relu(self, slope: float = 0.2):
        out = Tensor(np.where(self.data > 0, self.data, slope * self.data), (self,))

        def _backward():
            self.grad += out.grad * np.where(self.data > 0, 1.0, slope)

        out._backward = _backward
        return out

    def elu(self):
        pos = self.data > 0
        out = Tensor(np.where(pos, self.data, np.expm1(self.data)), (self,))

        def _backward():
            self.grad += out.grad * np.where(pos, 1.0, out.data + 1.0)

        out._backward = _backward
        return out

    def clip(self, lo: float, hi: float):
        """Clamp values; gradient flows only where the input was strictly
        inside the interval."""
        out = Tensor(np.clip(self.data, lo, hi), (self,))
        inside = (self.data > lo) & (self.data < hi)

        def _backward():
            self.grad += out.grad * inside

        out._backward = _backward
        return out

    # -- reductions and shape ops ------------------------------------------

    def sum(self, axis=None, keepdims: bool = False):
        out = Tensor(self.data.sum(axis=axis, keepdims=keepdims), (self,))

        def _backward():
            g = out.grad
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            self.grad += np.broadcast_to(g, self.data.shape)

        out._backward = _backward
        return out

    def mean(self):
        size = self.data.size
        out = Tensor(self.data.mean(), (self,))

        def _backward():
            self.grad += np.broadcast_to(out.grad / size, self.data.shape)

        out._backward = _backward
        return out

    # -- graph traversal -----------------------------------------------------

    def backward(self):
        if self.data.size != 1:
            raise ValueError("backward() requires a scalar output")
        topo: list[Tensor] = []
        seen = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for child in node._prev:
                if id(child) not in seen:
                    stack.append((child, False))
        for node in topo:
            node.grad = np.zeros_like(node.data)
        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            node._backward()


def concat(tensors: list[Tensor], axis: int = 1) -> Tensor:
    parts = [t.data for t in tensors]
    out = Tensor(np.concatenate(parts, axis=axis), tuple(tensors))
    splits = np.cumsum([p.shape[axis] for p in parts])[:-1]

    def _backward():
        for t, g in zip(tensors, np.split(out.grad, splits, axis=axis)):
            t.grad += g

    out._backward = _backward
    return out


def masked_row_softmax(scores: Tensor, mask: np.ndarray) -> Tensor:
    """Softmax over each row restricted to positions where ``mask`` is
    nonzero; masked positions get exactly zero weight.

    Rows are shifted by their masked max before exponentiation for
    stability. The shift is treated as a constant, which leaves the
    gradient unchanged because softmax is shift invariant. Every row
    must have at least one unmasked entry (self-loops guarantee this for
    adjacency masks).
    """
    mask = np.asarray(mask, dtype=np.float64)
    if not (mask.any(axis=1)).all():
        raise ValueError("masked softmax row with no unmasked entries")
    shift = np.where(mask > 0, scores.data, -np.inf).max(axis=1, keepdims=True)
    # Push masked-out entries far below the row max so their exponentials
    # underflow to zero instead of overflowing before the mask multiply.
    sink = (1.0 - (mask > 0)) * -1e30
    num = (scores + sink - shift).exp() * (mask > 0)
    return num / num.sum(axis=1, keepdims=True)
