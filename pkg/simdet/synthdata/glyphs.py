"""Procedural glyph classes standing in for handwritten characters."""

from __future__ import annotations

import dataclasses
import math

import numpy as np
from PIL import Image, ImageDraw

GLYPH_SIZE = 32
SUPERSAMPLE = 4
MAX_ROTATION = math.radians(10.0)
SCALE_RANGE = (0.9, 1.1)
MAX_SHIFT = 2.0
WIDTH_RANGE = (1.2, 2.2)
PIXEL_NOISE = 0.05


@dataclasses.dataclass(frozen=True, eq=False)
class GlyphClass:
    """A stroke program: polylines with points in the unit square."""

    class_seed: int
    strokes: tuple[np.ndarray, ...]

    @classmethod
    def from_seed(cls, class_seed: int) -> GlyphClass:
        rng = np.random.default_rng(class_seed)
        strokes = []
        for _ in range(rng.integers(2, 5)):
            if rng.random() < 0.5:
                points = rng.uniform(0.15, 0.85, size=(rng.integers(2, 5), 2))
            else:
                centre = rng.uniform(0.35, 0.65, size=2)
                radius = rng.uniform(0.15, 0.3)
                start = rng.uniform(0.0, 2.0 * math.pi)
                angles = start + np.linspace(0.0, rng.uniform(0.5, 1.5) * math.pi, 16)
                points = centre + radius * np.stack([np.cos(angles), np.sin(angles)], axis=1)
            strokes.append(points)
        return cls(int(class_seed), tuple(strokes))


def render_glyph(glyph: GlyphClass, instance_seed: int, size: int = GLYPH_SIZE) -> np.ndarray:
    """Rasterise one jittered instance of ``glyph`` as a ``size``×``size`` array in [0, 1].

    Bright strokes on a dark background; the same (class, instance) pair
    always gives the same pixels.
    """
    rng = np.random.default_rng(np.random.SeedSequence([glyph.class_seed, instance_seed]))
    angle = rng.uniform(-MAX_ROTATION, MAX_ROTATION)
    scale = rng.uniform(*SCALE_RANGE)
    shift = rng.uniform(-MAX_SHIFT, MAX_SHIFT, size=2)
    width = rng.uniform(*WIDTH_RANGE)
    rotation = scale * np.array([[math.cos(angle), -math.sin(angle)], [math.sin(angle), math.cos(angle)]])

    canvas = size * SUPERSAMPLE
    image = Image.new("L", (canvas, canvas), 0)
    draw = ImageDraw.Draw(image)
    for stroke in glyph.strokes:
        pixels = ((stroke - 0.5) @ rotation.T + 0.5) * size + shift
        draw.line([tuple(p) for p in pixels * SUPERSAMPLE], fill=255, width=max(1, round(width * SUPERSAMPLE)), joint="curve")
    image = image.resize((size, size), Image.Resampling.BOX)

    pixels = np.asarray(image, dtype=np.float64) / 255.0
    pixels = pixels + rng.normal(0.0, PIXEL_NOISE, size=pixels.shape)
    return np.clip(pixels, 0.0, 1.0)


def class_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1, np.uint64)[0])


class GlyphSource:
    """``class_count`` synthetic classes with ``instances`` renderings each."""

    def __init__(self, seed: int, class_count: int, instances: int = 20):
        if class_count < 1 or instances < 2:
            raise ValueError("need at least one class and two instances per class")
        self.seed = seed
        self.class_ids = tuple(f"glyph-{i:04d}" for i in range(class_count))
        self._index = {class_id: i for i, class_id in enumerate(self.class_ids)}
        self._instances = instances
        self._glyphs: dict[str, GlyphClass] = {}

    def glyph(self, class_id: str) -> GlyphClass:
        if class_id not in self._glyphs:
            self._glyphs[class_id] = GlyphClass.from_seed(class_seed(self.seed, self._index[class_id]))
        return self._glyphs[class_id]

    def instances(self, class_id: str) -> int:
        return self._instances

    def instance(self, class_id: str, index: int) -> np.ndarray:
        return render_glyph(self.glyph(class_id), index)
