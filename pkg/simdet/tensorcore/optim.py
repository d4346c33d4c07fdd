"""Trainable parameter storage and plain stochastic gradient descent."""

from __future__ import annotations

import dataclasses
from typing import TYPE_CHECKING

import numpy as np

from simdet.errors import ShapeError
from simdet.tensorcore.tensor import Tensor

if TYPE_CHECKING:
    from collections.abc import Iterator, Mapping


class ParamStore:
    """Named trainable tensors (θ) plus named non-trainable buffers.

    Names are unique and shapes never change after creation; loading values
    into an existing store must match every shape exactly.
    """

    def __init__(self):
        self._params: dict[str, Tensor] = {}
        self._buffers: dict[str, np.ndarray] = {}
        # per-parameter optimizer state (plain SGD keeps a step counter only)
        self.state: dict[str, dict[str, float]] = {}

    def __repr__(self) -> str:
        return f"<ParamStore {len(self._params)} params, {len(self._buffers)} buffers>"

    def __len__(self) -> int:
        return len(self._params)

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self._params)

    def items(self):
        return self._params.items()

    def add(self, name: str, value: np.ndarray) -> Tensor:
        if name in self._params or name in self._buffers:
            raise ValueError(f"duplicate parameter name {name!r}")
        tensor = Tensor(np.array(value, dtype=np.float64), requires_grad=True, name=name)
        self._params[name] = tensor
        self.state[name] = {"steps": 0}
        return tensor

    def add_buffer(self, name: str, value: np.ndarray) -> np.ndarray:
        if name in self._params or name in self._buffers:
            raise ValueError(f"duplicate buffer name {name!r}")
        self._buffers[name] = np.array(value, dtype=np.float64)
        return self._buffers[name]

    def buffer(self, name: str) -> np.ndarray:
        return self._buffers[name]

    @property
    def buffers(self) -> Mapping[str, np.ndarray]:
        return self._buffers

    def zero_grad(self) -> None:
        for tensor in self._params.values():
            tensor.zero_grad()

    def count(self) -> int:
        return sum(t.size for t in self._params.values())

    def snapshot(self) -> dict[str, np.ndarray]:
        """Copies of every parameter and buffer, keyed by name."""
        values = {name: t.data.copy() for name, t in self._params.items()}
        values.update((name, b.copy()) for name, b in self._buffers.items())
        return values

    def load(self, values: Mapping[str, np.ndarray]) -> None:
        """Overwrite parameters and buffers in place from ``values``."""
        missing = (set(self._params) | set(self._buffers)) - set(values)
        if missing:
            raise ShapeError(f"missing values for {sorted(missing)}")
        for name, target in [*((n, t.data) for n, t in self._params.items()), *self._buffers.items()]:
            value = np.asarray(values[name], dtype=np.float64)
            if value.shape != target.shape:
                raise ShapeError(f"{name}: stored shape {value.shape} does not match {target.shape}")
            target[...] = value


@dataclasses.dataclass(frozen=True)
class SgdConfig:
    learning_rate: float = 0.1
    minibatch_size: int = 64

    def __post_init__(self):
        # zero is admitted as a frozen dry run
        if self.learning_rate < 0.0:
            raise ValueError(f"learning rate must not be negative, got {self.learning_rate}")
        if self.minibatch_size < 1:
            raise ValueError(f"minibatch size must be positive, got {self.minibatch_size}")


def sgd_step(params: ParamStore, config: SgdConfig) -> ParamStore:
    """θ ← θ − lr·grad for every parameter, then zero the gradients."""
    missing = [name for name, tensor in params.items() if tensor.grad is None]
    if missing:
        raise ValueError(f"no gradient for parameters {missing}")
    for name, tensor in params.items():
        tensor.data -= config.learning_rate * tensor.grad
        tensor.grad = np.zeros_like(tensor.data)
        params.state[name]["steps"] += 1
    return params
