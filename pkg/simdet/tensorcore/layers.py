"""Network layers: valid convolution, max-pooling, batchnorm and friends.

All layers take channel-first inputs ``(batch, channels, *spatial)`` with one
or two spatial axes.
"""

from __future__ import annotations

import dataclasses
import itertools
import math
from typing import TYPE_CHECKING, Literal

import numpy as np

from simdet.errors import ShapeError
from simdet.tensorcore.tensor import Tensor, record

if TYPE_CHECKING:
    from collections.abc import Sequence

Mode = Literal["train", "infer"]

BATCHNORM_EPSILON = 1e-5
BATCHNORM_MOMENTUM = 0.9
L2_EPSILON = 1e-12


def _per_axis(value: int | Sequence[int], rank: int, what: str) -> tuple[int, ...]:
    values = (value,) * rank if isinstance(value, (int, np.integer)) else tuple(value)
    if len(values) != rank or any(v < 1 for v in values):
        raise ShapeError(f"{what} must be {rank} positive integer(s), got {value!r}")
    return tuple(int(v) for v in values)


def conv_output_extent(extent: int, kernel: int, stride: int = 1) -> int:
    return (extent - kernel) // stride + 1


def _flat_channels_last(x: np.ndarray) -> np.ndarray:
    """``(batch, channels, *spatial)`` as a contiguous ``(batch, prod(spatial), channels)``."""
    return np.ascontiguousarray(np.moveaxis(x, 1, -1)).reshape(x.shape[0], -1, x.shape[1])


def conv_forward(input: Tensor, kernel: Tensor, stride: int | Sequence[int] = 1) -> Tensor:
    """Valid (unpadded) cross-correlation.

    ``kernel`` is ``(out_channels, in_channels, *k)``. ``input`` is
    ``(batch, in_channels, *spatial)``, or ``(in_channels, *spatial)`` for a
    single example, in which case the output has no batch axis either.

    Spatial axes are flattened so every kernel offset becomes a shift along
    one axis and a single batched matrix product. Positions that wrap past
    the end of a row are computed and thrown away; strided outputs are
    taken from the stride-1 result.
    """
    rank = kernel.ndim - 2
    if rank not in (1, 2):
        raise ShapeError(f"kernel must have 1 or 2 spatial axes, got shape {kernel.shape}")
    batched = input.ndim == rank + 2
    if not batched and input.ndim != rank + 1:
        raise ShapeError(f"input shape {input.shape} does not fit kernel shape {kernel.shape}")
    x = input.data if batched else input.data[np.newaxis]
    w = kernel.data
    if x.shape[1] != w.shape[1]:
        raise ShapeError(f"input has {x.shape[1]} channels, kernel expects {w.shape[1]}")
    strides = _per_axis(stride, rank, "stride")
    spatial, k_shape = x.shape[2:], w.shape[2:]
    if any(n < k for n, k in zip(spatial, k_shape)):
        raise ShapeError(f"input spatial extents {spatial} are smaller than kernel extents {k_shape}")
    batch, out_channels = x.shape[0], w.shape[0]
    full = tuple(n - k + 1 for n, k in zip(spatial, k_shape))
    steps = tuple(math.prod(spatial[i + 1:]) for i in range(rank))
    span = sum((f - 1) * step for f, step in zip(full, steps)) + 1
    offsets = list(itertools.product(*(range(k) for k in k_shape)))
    shifts = [sum(o * step for o, step in zip(offset, steps)) for offset in offsets]
    # rows of the padded flat layout, cut back to the strided output grid
    grid_shape = (batch, full[0], *spatial[1:], out_channels)
    kept = (slice(None), *(slice(0, f, s) for f, s in zip(full, strides)), slice(None))

    def taps(offset):
        return w[(slice(None), slice(None), *offset)]

    xf = _flat_channels_last(x)
    acc = np.zeros((batch, math.prod(grid_shape[1:-1]), out_channels))
    for offset, shift in zip(offsets, shifts):
        acc[:, :span] += xf[:, shift:shift + span] @ taps(offset).T
    out = np.ascontiguousarray(np.moveaxis(acc.reshape(grid_shape)[kept], -1, 1))

    def backward(g):
        g = g if batched else g[np.newaxis]
        grid = np.zeros(grid_shape)
        grid[kept] = np.moveaxis(g, 1, -1)
        gf = grid.reshape(batch, -1, out_channels)[:, :span]
        dxf = np.zeros_like(xf)
        dw = np.zeros_like(w)
        for offset, shift in zip(offsets, shifts):
            window = xf[:, shift:shift + span]
            dw[(slice(None), slice(None), *offset)] = (np.swapaxes(window, 1, 2) @ gf).sum(axis=0).T
            dxf[:, shift:shift + span] += gf @ taps(offset)
        dx = np.moveaxis(dxf.reshape(batch, *spatial, x.shape[1]), -1, 1)
        return (dx if batched else dx[0]), dw

    return record("conv", Tensor(out if batched else out[0]), (input, kernel), backward)


def maxpool_output_extent(extent: int, window: int = 2, stride: int = 2) -> int:
    return (extent - window) // stride + 1


def maxpool_forward(input: Tensor, window: int = 2, stride: int = 2) -> Tensor:
    """Non-overlapping max-pooling over every axis after the channel axis.

    Gradient goes to the first maximal element of each window; trailing
    elements that do not fill a window are dropped.
    """
    if window != stride:
        raise ShapeError(f"only non-overlapping pooling is supported, got window {window}, stride {stride}")
    x = input.data
    rank = x.ndim - 2
    if rank not in (1, 2):
        raise ShapeError(f"pooling input must be (batch, channels, *spatial), got shape {x.shape}")
    spatial = x.shape[2:]
    if any(n < window for n in spatial):
        raise ShapeError(f"spatial extents {spatial} are smaller than the pooling window {window}")
    out_shape = tuple(maxpool_output_extent(n, window, stride) for n in spatial)
    lead = x.shape[:2]
    cropped = x[(slice(None), slice(None), *(slice(0, o * window) for o in out_shape))]
    split = cropped.reshape(*lead, *itertools.chain.from_iterable((o, window) for o in out_shape))
    # gather each window's elements on the last axis in row-major order
    order = [0, 1, *range(2, 2 + 2 * rank, 2), *range(3, 3 + 2 * rank, 2)]
    blocks = split.transpose(order).reshape(*lead, *out_shape, window ** rank)
    argmax = blocks.argmax(axis=-1)[..., np.newaxis]
    out = np.take_along_axis(blocks, argmax, axis=-1)[..., 0]

    def backward(g):
        routed = np.zeros_like(blocks)
        np.put_along_axis(routed, argmax, g[..., np.newaxis], axis=-1)
        unsplit = routed.reshape(*lead, *out_shape, *(window,) * rank).transpose(np.argsort(order))
        dx = np.zeros_like(x)
        dx[(slice(None), slice(None), *(slice(0, o * window) for o in out_shape))] = unsplit.reshape(cropped.shape)
        return (dx,)

    return record("maxpool", Tensor(out), (input,), backward)


@dataclasses.dataclass
class BatchNormState:
    """Running moments, updated in place during train-mode forward passes."""

    running_mean: np.ndarray
    running_var: np.ndarray
    momentum: float = BATCHNORM_MOMENTUM
    epsilon: float = BATCHNORM_EPSILON

    @classmethod
    def fresh(cls, channels: int) -> BatchNormState:
        return cls(np.zeros(channels), np.ones(channels))


def batchnorm_forward(input: Tensor, gamma: Tensor, beta: Tensor, mode: Mode, state: BatchNormState) -> Tensor:
    x = input.data
    channels = x.shape[1] if x.ndim >= 2 else 0
    if x.ndim < 2 or x.shape[0] == 0 or x.size == 0:
        raise ShapeError(f"batchnorm needs a non-empty (batch, channels, ...) input, got shape {x.shape}")
    if gamma.shape != (channels,) or beta.shape != (channels,):
        raise ShapeError(f"gamma/beta must have shape ({channels},), got {gamma.shape} and {beta.shape}")
    axes = (0, *range(2, x.ndim))
    bshape = (1, channels) + (1,) * (x.ndim - 2)
    if mode == "train":
        mean = x.mean(axis=axes)
        var = x.var(axis=axes)
        state.running_mean[...] = state.momentum * state.running_mean + (1.0 - state.momentum) * mean
        state.running_var[...] = state.momentum * state.running_var + (1.0 - state.momentum) * var
    elif mode == "infer":
        mean, var = state.running_mean.copy(), state.running_var.copy()
    else:
        raise ValueError(f"mode must be 'train' or 'infer', got {mode!r}")
    inv_std = 1.0 / np.sqrt(var + state.epsilon)
    x_hat = (x - mean.reshape(bshape)) * inv_std.reshape(bshape)
    out = gamma.data.reshape(bshape) * x_hat + beta.data.reshape(bshape)
    count = x.size // channels

    def backward(g):
        d_gamma = (g * x_hat).sum(axis=axes)
        d_beta = g.sum(axis=axes)
        d_xhat = g * gamma.data.reshape(bshape)
        if mode == "infer":
            return d_xhat * inv_std.reshape(bshape), d_gamma, d_beta
        dx = (inv_std.reshape(bshape) / count) * (
            count * d_xhat
            - d_xhat.sum(axis=axes).reshape(bshape)
            - x_hat * (d_xhat * x_hat).sum(axis=axes).reshape(bshape)
        )
        return dx, d_gamma, d_beta

    return record("batchnorm", Tensor(out), (input, gamma, beta), backward)


def relu_forward(input: Tensor) -> Tensor:
    out = Tensor(np.maximum(input.data, 0.0))
    return record("relu", out, (input,), lambda g: (g * (input.data > 0.0),))


def l2_normalize(input: Tensor, axis: int | tuple[int, ...] = 1, epsilon: float = L2_EPSILON) -> Tensor:
    """Divide each vector along ``axis`` by ``max(norm, epsilon)``."""
    x = input.data
    norm = np.sqrt((x * x).sum(axis=axis, keepdims=True))
    denom = np.maximum(norm, epsilon)
    out = x / denom
    above = norm > epsilon

    def backward(g):
        projection = (g * out).sum(axis=axis, keepdims=True)
        return ((g - above * out * projection) / denom,)

    return record("l2_normalize", Tensor(out), (input,), backward)


def softmax_temp(input: Tensor, temperature: float, axis: int | None = None) -> Tensor:
    """Temperature softmax; ``axis=None`` normalises over every element."""
    if not temperature > 0.0:
        raise ValueError(f"temperature must be positive, got {temperature}")
    z = input.data / temperature
    z = z - z.max(axis=axis, keepdims=True)
    e = np.exp(z)
    w = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        return (w * (g - (g * w).sum(axis=axis, keepdims=True)) / temperature,)

    return record("softmax", Tensor(w), (input,), backward)
