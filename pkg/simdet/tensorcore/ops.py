"""Elementwise and reduction operations with their backward rules."""

from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np

from simdet.errors import ShapeError
from simdet.tensorcore.tensor import Tensor, as_tensor, record

if TYPE_CHECKING:
    from collections.abc import Sequence


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum ``grad`` down to ``shape`` after numpy broadcasting."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = Tensor(a.data + b.data)
    return record("add", out, (a, b),
                  lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)))


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = Tensor(a.data - b.data)
    return record("sub", out, (a, b),
                  lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)))


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = Tensor(a.data * b.data)
    return record("mul", out, (a, b),
                  lambda g: (_unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)))


def div(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = Tensor(a.data / b.data)

    def backward(g):
        return (_unbroadcast(g / b.data, a.shape),
                _unbroadcast(-g * out.data / b.data, b.shape))

    return record("div", out, (a, b), backward)


def scale(a: Tensor, factor: float) -> Tensor:
    out = Tensor(a.data * factor)
    return record("scale", out, (a,), lambda g: (g * factor,))


def square(a: Tensor) -> Tensor:
    out = Tensor(a.data * a.data)
    return record("square", out, (a,), lambda g: (2.0 * g * a.data,))


def sqrt(a: Tensor) -> Tensor:
    if np.any(a.data <= 0.0):
        raise ValueError("sqrt needs strictly positive input; clamp it first")
    out = Tensor(np.sqrt(a.data))
    return record("sqrt", out, (a,), lambda g: (g / (2.0 * out.data),))


def clamp_min(a: Tensor, floor: float) -> Tensor:
    out = Tensor(np.maximum(a.data, floor))
    # gradient flows only where the input is above the floor
    return record("clamp_min", out, (a,), lambda g: (g * (a.data > floor),))


def total(a: Tensor, axis: int | tuple[int, ...] | None = None) -> Tensor:
    out = Tensor(a.data.sum(axis=axis))

    def backward(g):
        if axis is not None:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, a.shape).copy(),)

    return record("sum", out, (a,), backward)


def mean(a: Tensor) -> Tensor:
    return scale(total(a), 1.0 / a.size)


def dot(a: Tensor, b: Tensor) -> Tensor:
    """Inner product of two same-shape tensors, flattened."""
    if a.shape != b.shape:
        raise ShapeError(f"dot needs equal shapes, got {a.shape} and {b.shape}")
    out = Tensor(np.dot(a.data.ravel(), b.data.ravel()))
    return record("dot", out, (a, b), lambda g: (g * b.data, g * a.data))


def reshape(a: Tensor, shape: Sequence[int]) -> Tensor:
    out = Tensor(a.data.reshape(shape))
    return record("reshape", out, (a,), lambda g: (g.reshape(a.shape),))


def take(a: Tensor, index: int) -> Tensor:
    """Select one entry along the leading axis."""
    if not -a.shape[0] <= index < a.shape[0]:
        raise ShapeError(f"index {index} out of range for leading extent {a.shape[0]}")
    out = Tensor(a.data[index])

    def backward(g):
        full = np.zeros_like(a.data)
        full[index] = g
        return (full,)

    return record("take", out, (a,), backward)


def stack(tensors: Sequence[Tensor]) -> Tensor:
    if not tensors:
        raise ShapeError("stack needs at least one tensor")
    shapes = {t.shape for t in tensors}
    if len(shapes) != 1:
        raise ShapeError(f"stack needs equal shapes, got {sorted(shapes)}")
    out = Tensor(np.stack([t.data for t in tensors]))
    return record("stack", out, tuple(tensors), lambda g: tuple(g[i] for i in range(len(tensors))))


def transpose(a: Tensor, axes: Sequence[int]) -> Tensor:
    axes = tuple(axes)
    out = Tensor(np.transpose(a.data, axes))
    return record("transpose", out, (a,), lambda g: (np.transpose(g, np.argsort(axes)),))


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    if not tensors:
        raise ShapeError("concat needs at least one tensor")
    out = Tensor(np.concatenate([t.data for t in tensors], axis=axis))
    bounds = np.cumsum([t.shape[axis] for t in tensors])[:-1]
    return record("concat", out, tuple(tensors), lambda g: tuple(np.split(g, bounds, axis=axis)))


def slice_axis(a: Tensor, start: int, stop: int, axis: int = 0) -> Tensor:
    """``a[start:stop]`` along ``axis``."""
    index = [slice(None)] * a.ndim
    index[axis] = slice(start, stop)
    index = tuple(index)
    out = Tensor(a.data[index])

    def backward(g):
        full = np.zeros_like(a.data)
        full[index] = g
        return (full,)

    return record("slice", out, (a,), backward)
