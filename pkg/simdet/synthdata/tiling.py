"""n×n grids of single-class tiles."""

from __future__ import annotations

import dataclasses
from typing import TYPE_CHECKING

import numpy as np

from simdet.errors import DatasetError
from simdet.evalkit.boxes import Box

if TYPE_CHECKING:
    from collections.abc import Sequence

GRID_SIZES = (2, 3, 4)


@dataclasses.dataclass(frozen=True)
class TileCell:
    class_id: str
    box: Box


@dataclasses.dataclass(frozen=True, eq=False)
class TiledTarget:
    image: np.ndarray
    cells: tuple[TileCell, ...]
    n: int

    @property
    def classes(self) -> tuple[str, ...]:
        return tuple(cell.class_id for cell in self.cells)

    def box_of(self, class_id: str) -> Box:
        for cell in self.cells:
            if cell.class_id == class_id:
                return cell.box
        raise KeyError(class_id)


def tile_target(tiles: Sequence[tuple[str, np.ndarray]], n: int, rng: np.random.Generator) -> TiledTarget:
    """Place n² (class id, image) tiles on the grid in a random order.

    Cell boxes are (row, column) offsets and extents in pixels.
    """
    if n not in GRID_SIZES:
        raise DatasetError(f"grid size must be one of {GRID_SIZES}, got {n}")
    if len(tiles) != n * n:
        raise DatasetError(f"a {n}×{n} grid needs {n * n} tiles, got {len(tiles)}")
    class_ids = [class_id for class_id, _ in tiles]
    if len(set(class_ids)) != len(class_ids):
        raise DatasetError(f"tile classes must be distinct, got {sorted(class_ids)}")
    shapes = {image.shape for _, image in tiles}
    if len(shapes) != 1 or len(next(iter(shapes))) != 2 or len(set(next(iter(shapes)))) != 1:
        raise DatasetError(f"tiles must be equal square images, got shapes {sorted(shapes)}")
    side = next(iter(shapes))[0]

    image = np.zeros((n * side, n * side))
    cells = []
    for slot, which in enumerate(rng.permutation(len(tiles))):
        class_id, tile = tiles[which]
        row, col = divmod(slot, n)
        image[row * side:(row + 1) * side, col * side:(col + 1) * side] = tile
        cells.append(TileCell(class_id, Box((float(row * side), float(col * side)), (float(side), float(side)))))
    return TiledTarget(image, tuple(cells), n)
