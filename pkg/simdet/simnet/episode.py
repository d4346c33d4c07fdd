"""One exemplar–target pair."""

from __future__ import annotations

import dataclasses

import numpy as np

from simdet.errors import ShapeError
from simdet.evalkit.boxes import Box


@dataclasses.dataclass(frozen=True, eq=False)
class Episode:
    """An exemplar x, a target B and the pair label y.

    Arrays are channel-first: ``(1, 32, 32)`` images or ``(channels, frames)``
    sequences. ``truth_box`` is only read by evaluation and ``class_id`` is
    bookkeeping; neither is ever shown to a model.
    """

    episode_id: int
    exemplar: np.ndarray
    target: np.ndarray
    label: int
    class_id: str
    target_id: int
    truth_box: Box | None = None

    def __post_init__(self):
        if self.label not in (0, 1):
            raise ValueError(f"episode {self.episode_id}: label must be 0 or 1, got {self.label!r}")
        if self.exemplar.ndim != self.target.ndim or self.exemplar.shape[0] != self.target.shape[0]:
            raise ShapeError(f"episode {self.episode_id}: exemplar {self.exemplar.shape} and target {self.target.shape} disagree")
        if any(e > t for e, t in zip(self.exemplar.shape[1:], self.target.shape[1:])):
            raise ShapeError(f"episode {self.episode_id}: exemplar {self.exemplar.shape} exceeds target {self.target.shape}")

    @property
    def spatial_rank(self) -> int:
        return self.target.ndim - 1

    @property
    def target_extent(self) -> tuple[int, ...]:
        return self.target.shape[1:]
