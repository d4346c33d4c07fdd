"""Axis-aligned boxes in input units (pixels or frames)."""

from __future__ import annotations

import dataclasses
import math

from simdet.errors import ShapeError


@dataclasses.dataclass(frozen=True, order=True)
class Box:
    """Per-axis (offset, extent); one axis for sequences, two (row, col) for images."""

    offsets: tuple[float, ...]
    extents: tuple[float, ...]

    def __post_init__(self):
        if len(self.offsets) != len(self.extents) or not self.offsets:
            raise ShapeError(f"box needs matching offsets and extents, got {self.offsets} / {self.extents}")
        if any(not e > 0 for e in self.extents):
            raise ShapeError(f"box extents must be positive, got {self.extents}")

    @property
    def rank(self) -> int:
        return len(self.offsets)

    @property
    def ends(self) -> tuple[float, ...]:
        return tuple(o + e for o, e in zip(self.offsets, self.extents))

    @property
    def volume(self) -> float:
        return math.prod(self.extents)

    def shifted(self, start: float, end: float) -> Box | None:
        """Move the start and end of a 1-D box independently; ``None`` when the box collapses."""
        if self.rank != 1:
            raise ShapeError("start/end shifts apply to 1-D boxes only")
        new_start = self.offsets[0] + start
        new_end = self.ends[0] + end
        if not new_end > new_start:
            return None
        return Box((new_start,), (new_end - new_start,))

    def clamped(self, limits: tuple[float, ...]) -> Box | None:
        """Clip to ``[0, limit)`` per axis; ``None`` when nothing is left."""
        starts = tuple(min(max(o, 0.0), lim) for o, lim in zip(self.offsets, limits))
        ends = tuple(min(max(e, 0.0), lim) for e, lim in zip(self.ends, limits))
        extents = tuple(e - s for s, e in zip(starts, ends))
        if any(e <= 0 for e in extents):
            return None
        return Box(starts, extents)

    def as_row(self) -> list[float]:
        return [*self.offsets, *self.extents]

    @classmethod
    def from_row(cls, values: list[float]) -> Box:
        rank = len(values) // 2
        return cls(tuple(values[:rank]), tuple(values[rank:]))


def iou(a: Box, b: Box) -> float:
    """|a ∩ b| / |a ∪ b|."""
    if a.rank != b.rank:
        raise ShapeError(f"cannot compare a {a.rank}-D box with a {b.rank}-D box")
    overlap = 1.0
    for a_start, a_end, b_start, b_end in zip(a.offsets, a.ends, b.offsets, b.ends):
        overlap *= max(0.0, min(a_end, b_end) - max(a_start, b_start))
    union = a.volume + b.volume - overlap
    return overlap / union
