"""Central finite-difference checks against the tape's gradients."""

from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np

from simdet.tensorcore.tensor import Tape, Tensor

if TYPE_CHECKING:
    from collections.abc import Callable, Sequence

    from simdet.tensorcore.optim import ParamStore


def relative_error(autograd: np.ndarray, numeric: np.ndarray) -> float:
    """max |autograd − numeric| / max(1, |numeric|) over coordinates."""
    autograd, numeric = np.asarray(autograd), np.asarray(numeric)
    if autograd.size == 0:
        return 0.0
    return float(np.max(np.abs(autograd - numeric) / np.maximum(1.0, np.abs(numeric))))


def finite_diff_gradcheck(fn: Callable[[Tensor], Tensor], point: Tensor, h: float = 1e-5) -> float:
    """Compare the tape gradient of ``fn`` at ``point`` with central differences.

    ``fn`` must be pure and deterministic and return a scalar tensor.
    """
    leaf = Tensor(point.data.copy(), requires_grad=True)
    with Tape() as tape:
        loss = fn(leaf)
    tape.backward(loss)
    autograd = leaf.grad if leaf.grad is not None else np.zeros_like(leaf.data)

    base = point.data.copy()
    numeric = np.zeros_like(base)
    for index in np.ndindex(base.shape):
        shifted = base.copy()
        shifted[index] = base[index] + h
        upper = fn(Tensor(shifted)).item()
        shifted[index] = base[index] - h
        lower = fn(Tensor(shifted)).item()
        numeric[index] = (upper - lower) / (2.0 * h)
    return relative_error(autograd, numeric)


def param_gradcheck(
    loss_fn: Callable[[], Tensor],
    params: ParamStore,
    coordinates: Sequence[tuple[str, tuple[int, ...]]],
    h: float = 1e-5,
) -> float:
    """Finite-difference check of selected parameter coordinates.

    ``loss_fn`` reads the current values of ``params``; it is evaluated once
    on a tape and twice more per coordinate with that coordinate nudged.
    """
    params.zero_grad()
    with Tape() as tape:
        loss = loss_fn()
    tape.backward(loss)
    autograd, numeric = [], []
    for name, index in coordinates:
        tensor = params[name]
        autograd.append(0.0 if tensor.grad is None else tensor.grad[index])
        original = tensor.data[index]
        tensor.data[index] = original + h
        upper = loss_fn().item()
        tensor.data[index] = original - h
        lower = loss_fn().item()
        tensor.data[index] = original
        numeric.append((upper - lower) / (2.0 * h))
    params.zero_grad()
    return relative_error(np.array(autograd), np.array(numeric))


def sample_coordinates(params: ParamStore, count: int, rng: np.random.Generator) -> list[tuple[str, tuple[int, ...]]]:
    """Draw ``count`` distinct (name, index) coordinates, uniformly over all entries."""
    names = list(params)
    sizes = np.array([params[name].size for name in names])
    flat = rng.choice(int(sizes.sum()), size=min(count, int(sizes.sum())), replace=False)
    bounds = np.cumsum(sizes)
    picked = []
    for position in np.sort(flat):
        which = int(np.searchsorted(bounds, position, side="right"))
        local = int(position - (bounds[which - 1] if which else 0))
        picked.append((names[which], tuple(int(i) for i in np.unravel_index(local, params[names[which]].shape))))
    return picked
