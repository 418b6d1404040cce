"""Reverse-mode automatic differentiation over batched float64 arrays.

A Tensor wraps one ndarray and records the op that produced it; backward
walks the graph in reverse topological order. Parents are kept as ordered
tuples and traversal is depth-first over that order, so gradient
accumulation order (and therefore every bit of a training run) is
reproducible.
"""

from __future__ import annotations

import numpy as np

from .errors import ContractViolation, StaleTapeError


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum a gradient back down to the shape it was broadcast from."""
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
    __slots__ = ("data", "grad", "requires_grad", "version", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False, _parents=()):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = bool(requires_grad) or any(
            p.requires_grad for p in _parents
        )
        self.version = 0  # bumped on every in-place parameter update
        self._parents = _parents
        self._backward = None

    @property
    def shape(self):
        return self.data.shape

    def zero_grad(self):
        self.grad = None

    def bump_version(self):
        self.version += 1

    # ---- graph construction -------------------------------------------------

    def __add__(self, other):
        other = other if isinstance(other, Tensor) else Tensor(other)
        out = Tensor(self.data + other.data, _parents=(self, other))

        def backward():
            if self.requires_grad:
                self._accumulate(_unbroadcast(out.grad, self.data.shape))
            if other.requires_grad:
                other._accumulate(_unbroadcast(out.grad, other.data.shape))

        out._backward = backward
        return out

    def __mul__(self, other):
        other = other if isinstance(other, Tensor) else Tensor(other)
        out = Tensor(self.data * other.data, _parents=(self, other))

        def backward():
            if self.requires_grad:
                self._accumulate(_unbroadcast(out.grad * other.data, self.data.shape))
            if other.requires_grad:
                other._accumulate(_unbroadcast(out.grad * self.data, other.data.shape))

        out._backward = backward
        return out

    def __neg__(self):
        return self * (-1.0)

    def __sub__(self, other):
        other = other if isinstance(other, Tensor) else Tensor(other)
        return self + (-other)

    def __rmul__(self, other):
        return self * other

    def transpose(self):
        out = Tensor(self.data.T, _parents=(self,))

        def backward():
            if self.requires_grad:
                self._accumulate(out.grad.T)

        out._backward = backward
        return out

    def matmul(self, other):
        other = other if isinstance(other, Tensor) else Tensor(other)
        if self.data.shape[-1] != other.data.shape[0]:
            raise ContractViolation(
                f"matmul shape mismatch: {self.data.shape} @ {other.data.shape}"
            )
        out = Tensor(self.data @ other.data, _parents=(self, other))

        def backward():
            if self.requires_grad:
                self._accumulate(out.grad @ other.data.T)
            if other.requires_grad:
                other._accumulate(self.data.T @ out.grad)

        out._backward = backward
        return out

    def __matmul__(self, other):
        return self.matmul(other)

    def sum(self, axis=None, keepdims: bool = False):
        out = Tensor(self.data.sum(axis=axis, keepdims=keepdims), _parents=(self,))

        def backward():
            if not self.requires_grad:
                return
            g = out.grad
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            self._accumulate(np.broadcast_to(g, self.data.shape))

        out._backward = backward
        return out

    def mean(self, axis=None, keepdims: bool = False):
        count = self.data.size if axis is None else self.data.shape[axis]
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / count)

    def relu(self):
        out = Tensor(np.maximum(self.data, 0.0), _parents=(self,))

        def backward():
            if self.requires_grad:
                # derivative at 0 is the left limit: 0
                self._accumulate(out.grad * (self.data > 0.0))

        out._backward = backward
        return out

    def leaky_relu(self, slope: float = 0.2):
        out = Tensor(np.where(self.data > 0.0, self.data, slope * self.data),
                     _parents=(self,))

        def backward():
            if self.requires_grad:
                self._accumulate(out.grad * np.where(self.data > 0.0, 1.0, slope))

        out._backward = backward
        return out

    def tanh(self):
        out = Tensor(np.tanh(self.data), _parents=(self,))

        def backward():
            if self.requires_grad:
                self._accumulate(out.grad * (1.0 - out.data * out.data))

        out._backward = backward
        return out

    # ---- backward -----------------------------------------------------------

    def _accumulate(self, g):
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    def topo_order(self) -> list["Tensor"]:
        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            # reversed keeps the visit order identical to the recursive form
            for parent in reversed(node._parents):
                if id(parent) not in seen:
                    stack.append((parent, False))
        return order

    def backward(self, adjoint=None):
        """Seed this node's adjoint and propagate through the graph."""
        if adjoint is None:
            adjoint = np.ones_like(self.data)
        adjoint = np.asarray(adjoint, dtype=np.float64)
        if adjoint.shape != self.data.shape:
            raise ContractViolation(
                f"adjoint shape {adjoint.shape} != output shape {self.data.shape}"
            )
        order = self.topo_order()
        self.grad = adjoint.copy()
        for node in reversed(order):
            if node._backward is not None and node.requires_grad:
                node._backward()


class Tape:
    """Recording of one forward pass: output node plus the parameters it read.

    Replaying backward after any parameter was mutated raises StaleTapeError;
    the recorded values no longer describe the network.
    """

    def __init__(self, output: Tensor, params: tuple[Tensor, ...]):
        self.output = output
        self.params = tuple(params)
        self.versions = tuple(p.version for p in self.params)

    def check_fresh(self):
        for p, v in zip(self.params, self.versions):
            if p.version != v:
                raise StaleTapeError(
                    "tape is stale: a parameter was updated after forward"
                )

    def backward(self, output_adjoint=None) -> list[np.ndarray]:
        """Run reverse-mode and return one gradient array per parameter."""
        self.check_fresh()
        for p in self.params:
            p.zero_grad()
        self.output.backward(output_adjoint)
        return [
            p.grad.copy() if p.grad is not None else np.zeros_like(p.data)
            for p in self.params
        ]


def backward(tape: Tape, output_adjoint=None) -> list[np.ndarray]:
    return tape.backward(output_adjoint)


def finite_difference_max_error(fun, params, step: float = 1e-4) -> float:
    """Max relative error between fun's autodiff gradients and central differences.

    fun(params) must return a scalar-output Tape-like pair (value, grads) is
    awkward; instead fun must return a scalar Tensor built from the given
    parameter Tensors. Every parameter entry is perturbed by +-step.
    """
    out = fun()
    for p in params:
        p.zero_grad()
    out.backward(np.ones_like(out.data))
    auto = [
        p.grad.copy() if p.grad is not None else np.zeros_like(p.data)
        for p in params
    ]

    worst = 0.0
    for p, g in zip(params, auto):
        flat = p.data.reshape(-1)
        gflat = g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            hi = float(fun().data)
            flat[i] = orig - step
            lo = float(fun().data)
            flat[i] = orig
            fd = (hi - lo) / (2.0 * step)
            err = abs(gflat[i] - fd) / (abs(fd) + 1e-8)
            if err > worst:
                worst = err
    return worst
