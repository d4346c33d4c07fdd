"""Similarity maps and the geometry that ties map indices to input boxes."""

from __future__ import annotations

import dataclasses
import math
from typing import Protocol

import numpy as np

from simdet.errors import ShapeError
from simdet.evalkit.boxes import Box
from simdet.tensorcore.tensor import Tensor


class MapGeometry(Protocol):
    @property
    def size(self) -> int: ...

    def box(self, index: int) -> Box: ...


@dataclasses.dataclass(frozen=True)
class StridedGeometry:
    """Map index l (row-major) → box at ``l × stride`` with a fixed extent."""

    map_shape: tuple[int, ...]
    stride: tuple[int, ...]
    extent: tuple[int, ...]

    @property
    def size(self) -> int:
        return math.prod(self.map_shape)

    def box(self, index: int) -> Box:
        position = np.unravel_index(index, self.map_shape)
        return Box(tuple(float(p * s) for p, s in zip(position, self.stride)),
                   tuple(float(e) for e in self.extent))


@dataclasses.dataclass(frozen=True)
class ExplicitGeometry:
    """One stored box per map index (used when box extents vary by location)."""

    boxes: tuple[Box, ...]

    @property
    def size(self) -> int:
        return len(self.boxes)

    def box(self, index: int) -> Box:
        return self.boxes[index]


@dataclasses.dataclass
class SimilarityMap:
    """Per-location scores s_l of one exemplar against one target."""

    scores: Tensor
    geometry: MapGeometry

    def __post_init__(self):
        if self.scores.size != self.geometry.size:
            raise ShapeError(f"{self.scores.size} scores but geometry covers {self.geometry.size} locations")

    @property
    def values(self) -> np.ndarray:
        return self.scores.data.ravel()

    def argmax(self) -> int:
        # np.argmax returns the first index on ties
        return int(np.argmax(self.values))

    def box(self, index: int) -> Box:
        return self.geometry.box(index)
