"""Image sources: the interface shared by synthetic glyphs and an external corpus."""

from __future__ import annotations

import logging
from typing import TYPE_CHECKING, Protocol

import numpy as np
from PIL import Image

from simdet.errors import DatasetError
from simdet.synthdata.glyphs import GLYPH_SIZE

if TYPE_CHECKING:
    from collections.abc import Sequence
    from pathlib import Path

logger = logging.getLogger(__name__)


class ImageSource(Protocol):
    """Classes of 32×32 grayscale instances in [0, 1]."""

    class_ids: Sequence[str]

    def instances(self, class_id: str) -> int: ...

    def instance(self, class_id: str, index: int) -> np.ndarray: ...


class CorpusSource:
    """Images loaded from a class-per-folder directory."""

    def __init__(self, images: dict[str, list[np.ndarray]]):
        self._images = images
        self.class_ids = tuple(images)

    def instances(self, class_id: str) -> int:
        return len(self._images[class_id])

    def instance(self, class_id: str, index: int) -> np.ndarray:
        return self._images[class_id][index]


def _square(image: Image.Image, fill: int) -> Image.Image:
    """Pad the short side symmetrically so the aspect ratio survives resizing."""
    side = max(image.size)
    canvas = Image.new("L", (side, side), fill)
    canvas.paste(image, ((side - image.width) // 2, (side - image.height) // 2))
    return canvas


def load_image(path: Path, size: int = GLYPH_SIZE, invert: bool = False) -> np.ndarray:
    with Image.open(path) as image:
        gray = image.convert("L")
    if invert:
        gray = Image.eval(gray, lambda v: 255 - v)
    gray = _square(gray, 0).resize((size, size), Image.Resampling.BOX)
    return np.asarray(gray, dtype=np.float64) / 255.0


def load_image_dataset(directory: Path, size: int = GLYPH_SIZE, invert: bool = False) -> CorpusSource:
    """Read ``directory/<class>/<image>`` raster files, in lexicographic path order.

    Strokes are expected bright on a dark background; pass ``invert`` for
    dark-on-light scans. Unreadable files are skipped with a warning.
    """
    if not directory.is_dir():
        raise DatasetError("not a directory", directory)
    images: dict[str, list[np.ndarray]] = {}
    for class_dir in sorted(p for p in directory.iterdir() if p.is_dir()):
        loaded = []
        for path in sorted(p for p in class_dir.iterdir() if p.is_file()):
            try:
                loaded.append(load_image(path, size, invert))
            except OSError as err:
                logger.warning("skipping unreadable image %s: %s", path, err)
        if not loaded:
            raise DatasetError(f"class {class_dir.name!r} has no readable images", class_dir)
        images[class_dir.name] = loaded
    if not images:
        raise DatasetError("no class folders found", directory)
    logger.info("loaded %d classes from %s", len(images), directory)
    return CorpusSource(images)
