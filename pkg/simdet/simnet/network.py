"""The embedding network f_θ and its layer arithmetic."""

from __future__ import annotations

import dataclasses
import math
from typing import TYPE_CHECKING

import numpy as np

from simdet.errors import ShapeError
from simdet.tensorcore import ops
from simdet.tensorcore.layers import (
    BatchNormState,
    Mode,
    batchnorm_forward,
    conv_forward,
    conv_output_extent,
    maxpool_forward,
    maxpool_output_extent,
    relu_forward,
)
from simdet.tensorcore.optim import ParamStore
from simdet.tensorcore.tensor import Tensor

if TYPE_CHECKING:
    from collections.abc import Sequence

POOL_WINDOW = 2
DEFAULT_TEMPERATURE = 1.0 / 3.0


@dataclasses.dataclass(frozen=True)
class LayerSpec:
    channels: int
    kernel: int = 5
    stride: int = 1
    pool_after: bool = False


@dataclasses.dataclass(frozen=True)
class EmbedConfig:
    """Architecture of f_θ plus the attention temperature T.

    Every layer is conv → batchnorm → ReLU (→ 2/2 max-pool), so embeddings
    are elementwise nonnegative.
    """

    spatial_rank: int
    in_channels: int
    layers: tuple[LayerSpec, ...]
    temperature: float = DEFAULT_TEMPERATURE

    def __post_init__(self):
        if self.spatial_rank not in (1, 2):
            raise ValueError(f"spatial rank must be 1 or 2, got {self.spatial_rank}")
        if not self.layers:
            raise ValueError("the network needs at least one layer")
        if not self.temperature > 0.0:
            raise ValueError(f"temperature must be positive, got {self.temperature}")


def desk_preset(spatial_rank: int, in_channels: int, temperature: float = DEFAULT_TEMPERATURE) -> EmbedConfig:
    channels = (32, 32, 64, 64)
    layers = tuple(LayerSpec(c, pool_after=i % 2 == 1) for i, c in enumerate(channels))
    return EmbedConfig(spatial_rank, in_channels, layers, temperature)


def large_preset(spatial_rank: int, in_channels: int, temperature: float = DEFAULT_TEMPERATURE) -> EmbedConfig:
    channels = (256,) * 4 + (512,) * 4
    layers = tuple(LayerSpec(c, pool_after=i % 2 == 1) for i, c in enumerate(channels))
    return EmbedConfig(spatial_rank, in_channels, layers, temperature)


PRESETS = {
    "desk": desk_preset,
    "large": large_preset,
}


def preset(name: str, spatial_rank: int, in_channels: int, temperature: float = DEFAULT_TEMPERATURE) -> EmbedConfig:
    try:
        factory = PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown model preset {name!r}; choose from {sorted(PRESETS)}") from None
    return factory(spatial_rank, in_channels, temperature)


def init_params(config: EmbedConfig, seed: int) -> ParamStore:
    """He-normal kernels (std √(2/fan_in)), γ = 1, β = 0, running moments 0 / 1."""
    rng = np.random.default_rng(seed)
    params = ParamStore()
    in_channels = config.in_channels
    for i, layer in enumerate(config.layers):
        fan_in = in_channels * layer.kernel ** config.spatial_rank
        shape = (layer.channels, in_channels, *(layer.kernel,) * config.spatial_rank)
        params.add(f"conv{i}.weight", rng.normal(0.0, math.sqrt(2.0 / fan_in), size=shape))
        params.add(f"bn{i}.gamma", np.ones(layer.channels))
        params.add(f"bn{i}.beta", np.zeros(layer.channels))
        fresh = BatchNormState.fresh(layer.channels)
        params.add_buffer(f"bn{i}.running_mean", fresh.running_mean)
        params.add_buffer(f"bn{i}.running_var", fresh.running_var)
        in_channels = layer.channels
    return params


def output_extent(config: EmbedConfig, extent: int) -> int:
    """Spatial extent of the embedding for an input extent (may be ≤ 0)."""
    for layer in config.layers:
        extent = conv_output_extent(extent, layer.kernel, layer.stride)
        if layer.pool_after:
            extent = maxpool_output_extent(extent, POOL_WINDOW, POOL_WINDOW) if extent >= POOL_WINDOW else 0
        if extent < 1:
            return 0
    return extent


def receptive_extent(config: EmbedConfig, embedding_extent: int) -> int:
    """Input extent covered by ``embedding_extent`` consecutive embedding cells."""
    extent = embedding_extent
    for layer in reversed(config.layers):
        if layer.pool_after:
            extent = (extent - 1) * POOL_WINDOW + POOL_WINDOW
        extent = (extent - 1) * layer.stride + layer.kernel
    return extent


def total_stride(config: EmbedConfig) -> int:
    return math.prod(layer.stride * (POOL_WINDOW if layer.pool_after else 1) for layer in config.layers)


def min_input_extent(config: EmbedConfig) -> int:
    return receptive_extent(config, 1)


def network_geometry(config: EmbedConfig, exemplar_shape: Sequence[int]) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Total stride and receptive extent per spatial axis for an exemplar input shape.

    A map index at embedding position p covers the input box starting at
    ``p × stride`` with the receptive extent of the whole exemplar embedding.
    """
    spatial = tuple(exemplar_shape[1:])
    stride = total_stride(config)
    extents = tuple(receptive_extent(config, output_extent(config, n)) for n in spatial)
    return (stride,) * len(spatial), extents


def _check_input(shape: Sequence[int], config: EmbedConfig) -> None:
    if shape[1] != config.in_channels:
        raise ShapeError(f"expected {config.in_channels} input channels, got shape {tuple(shape)}")
    minimum = min_input_extent(config)
    if any(n < minimum for n in shape[2:]):
        raise ShapeError(f"spatial extents {tuple(shape[2:])} are below the network minimum {minimum}")


def _joint_batchnorm(groups: list[Tensor], index: int, params: ParamStore, mode: Mode) -> list[Tensor]:
    """Batchnorm with one set of statistics over every group, whatever their spatial extents."""
    state = BatchNormState(params.buffer(f"bn{index}.running_mean"), params.buffer(f"bn{index}.running_var"))
    gamma, beta = params[f"bn{index}.gamma"], params[f"bn{index}.beta"]
    if len(groups) == 1:
        return [batchnorm_forward(groups[0], gamma, beta, mode, state)]

    swap = (1, 0, *range(2, groups[0].ndim))
    channels = groups[0].shape[1]
    flat = [ops.reshape(ops.transpose(g, swap), (channels, -1)) for g in groups]
    widths = [f.shape[1] for f in flat]
    joined = ops.concat(flat, axis=1)
    normed = batchnorm_forward(ops.reshape(joined, (1, channels, joined.shape[1])), gamma, beta, mode, state)
    normed = ops.reshape(normed, joined.shape)

    out, start = [], 0
    for group, width in zip(groups, widths):
        part = ops.slice_axis(normed, start, start + width, axis=1)
        moved = (group.shape[1], group.shape[0], *group.shape[2:])
        out.append(ops.transpose(ops.reshape(part, moved), swap))
        start += width
    return out


def _forward(groups: list[Tensor], config: EmbedConfig, params: ParamStore, mode: Mode) -> list[Tensor]:
    for group in groups:
        _check_input(group.shape, config)
    for i, layer in enumerate(config.layers):
        groups = [conv_forward(g, params[f"conv{i}.weight"], layer.stride) for g in groups]
        groups = _joint_batchnorm(groups, i, params, mode)
        groups = [relu_forward(g) for g in groups]
        if layer.pool_after:
            groups = [maxpool_forward(g, POOL_WINDOW, POOL_WINDOW) for g in groups]
    return groups


def embed(input: Tensor, config: EmbedConfig, params: ParamStore, mode: Mode) -> Tensor:
    """Embed a ``(channels, *spatial)`` input or a ``(batch, channels, *spatial)`` batch.

    In train mode batchnorm statistics are those of this batch and the
    running moments are updated once.
    """
    batched = input.ndim == config.spatial_rank + 2
    if not batched and input.ndim != config.spatial_rank + 1:
        raise ShapeError(f"expected {config.spatial_rank} spatial axes, got input shape {input.shape}")
    x = input if batched else ops.reshape(input, (1, *input.shape))
    x = _forward([x], config, params, mode)[0]
    return x if batched else ops.reshape(x, x.shape[1:])


def embed_many(arrays: Sequence[np.ndarray], config: EmbedConfig, params: ParamStore, mode: Mode) -> list[Tensor]:
    """Embed unbatched inputs of possibly different extents as one branch invocation.

    Inputs sharing a shape go through the convolutions together; batchnorm
    uses a single set of statistics over all of them, so a lone exemplar of
    unusual length is normalised against its minibatch. Output order follows
    ``arrays``.
    """
    if not arrays:
        raise ShapeError("embed_many needs at least one input")
    members: dict[tuple[int, ...], list[int]] = {}
    for i, array in enumerate(arrays):
        if array.ndim != config.spatial_rank + 1:
            raise ShapeError(f"expected {config.spatial_rank} spatial axes, got input shape {array.shape}")
        members.setdefault(array.shape, []).append(i)
    batches = [Tensor(np.stack([arrays[i] for i in indices])) for indices in members.values()]

    embedded: list[Tensor | None] = [None] * len(arrays)
    for indices, batch in zip(members.values(), _forward(batches, config, params, mode)):
        for position, i in enumerate(indices):
            embedded[i] = ops.take(batch, position)
    return embedded


def embedding_shape(config: EmbedConfig, input_shape: Sequence[int]) -> tuple[int, ...]:
    """Output shape of :func:`embed` for one unbatched input shape."""
    last = config.layers[-1].channels
    return (last, *(output_extent(config, n) for n in input_shape[1:]))
