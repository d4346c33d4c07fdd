"""Dense float64 tensors and the tape that records their history.

Operations executed while a :class:`Tape` is active (``with Tape() as tape:``)
are appended to it in execution order, so the record is topologically sorted
by construction. Operations executed with no active tape are not recorded;
that is how inference runs.
"""

from __future__ import annotations

import contextvars
import dataclasses
from typing import TYPE_CHECKING

import numpy as np

from simdet.errors import ShapeError

if TYPE_CHECKING:
    from collections.abc import Callable, Iterable, Sequence

    BackwardRule = Callable[[np.ndarray], Sequence[np.ndarray | None]]

_active_tape: contextvars.ContextVar[Tape | None] = contextvars.ContextVar(
    "simdet_active_tape", default=None
)


class Tensor:
    """A row-major float64 array with an optional gradient slot."""

    __slots__ = ("data", "grad", "requires_grad", "name")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        self.data: np.ndarray = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self.name = name

    def __repr__(self) -> str:
        label = f" {self.name!r}" if self.name else ""
        return f"<Tensor{label} shape={self.shape} requires_grad={self.requires_grad}>"

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f"item() needs a single value, tensor has shape {self.shape}")
        return float(self.data.reshape(()))

    def numpy(self) -> np.ndarray:
        return self.data

    def zero_grad(self) -> None:
        self.grad = None

    def accumulate_grad(self, grad: np.ndarray) -> None:
        if grad.shape != self.data.shape:
            raise ShapeError(f"gradient shape {grad.shape} does not match tensor shape {self.shape}")
        self.grad = grad.copy() if self.grad is None else self.grad + grad


def as_tensor(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


@dataclasses.dataclass(frozen=True)
class TapeRecord:
    op: str
    inputs: tuple[Tensor, ...]
    output: Tensor
    backward: BackwardRule


class Tape:
    """Ordered record of executed operations."""

    def __init__(self):
        self.records: list[TapeRecord] = []
        self._tokens: list[contextvars.Token] = []

    def __enter__(self) -> Tape:
        self._tokens.append(_active_tape.set(self))
        return self

    def __exit__(self, *exc_info) -> None:
        _active_tape.reset(self._tokens.pop())

    def __len__(self) -> int:
        return len(self.records)

    def backward(self, loss: Tensor) -> None:
        backward_sweep(self, loss)


def active_tape() -> Tape | None:
    return _active_tape.get()


def record(op: str, output: Tensor, inputs: Iterable[Tensor], backward: BackwardRule) -> Tensor:
    """Attach ``output`` to the active tape when any input needs a gradient."""
    inputs = tuple(inputs)
    tape = _active_tape.get()
    if tape is None or not any(t.requires_grad for t in inputs):
        return output
    output.requires_grad = True
    tape.records.append(TapeRecord(op, inputs, output, backward))
    return output


def backward_sweep(tape: Tape, loss: Tensor) -> None:
    """Accumulate dLoss/dx into ``.grad`` of every leaf that requires a gradient.

    Leaves are tensors the tape consumed but did not produce (parameters and
    inputs). Gradients of intermediate results live only for the sweep.
    Calling this twice without zeroing accumulates twice.
    """
    if loss.data.size != 1:
        raise ShapeError(f"loss must be a scalar, got shape {loss.shape}")
    produced = {id(rec.output) for rec in tape.records}
    if id(loss) not in produced:
        raise ShapeError("loss was not produced by an operation on this tape")

    pending: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    for rec in reversed(tape.records):
        out_grad = pending.pop(id(rec.output), None)
        if out_grad is None:
            continue
        in_grads = rec.backward(out_grad)
        for tensor, grad in zip(rec.inputs, in_grads):
            if grad is None or not tensor.requires_grad:
                continue
            key = id(tensor)
            if key in produced:
                pending[key] = grad if key not in pending else pending[key] + grad
            else:
                tensor.accumulate_grad(np.asarray(grad, dtype=np.float64).reshape(tensor.shape))
