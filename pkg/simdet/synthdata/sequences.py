"""Synthetic keyword-in-utterance feature sequences."""

from __future__ import annotations

import dataclasses
from typing import TYPE_CHECKING

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.ndimage import gaussian_filter1d

from simdet.errors import DatasetError
from simdet.evalkit.boxes import Box
from simdet.synthdata.glyphs import class_seed

if TYPE_CHECKING:
    from collections.abc import Sequence

SEQUENCE_CHANNELS = 16
SEQUENCE_FRAMES = 200
TEMPLATE_FRAMES = (35, 40)
WARP_RANGE = (0.8, 1.25)
INSERT_NOISE = 0.1
BACKGROUND_SCALE = 0.5
CONTROL_POINTS = 6


@dataclasses.dataclass(frozen=True, eq=False)
class ClassTemplate:
    """The prototype ``(frames, channels)`` trajectory of one keyword class."""

    class_id: str
    frames: np.ndarray

    @property
    def length(self) -> int:
        return self.frames.shape[0]


@dataclasses.dataclass(frozen=True, eq=False)
class SequenceTarget:
    features: np.ndarray
    embedded: tuple[str, Box] | None
    distractors: tuple[tuple[str, Box], ...] = ()

    def __post_init__(self):
        if self.embedded is not None:
            start, end = self.embedded[1].offsets[0], self.embedded[1].ends[0]
            if start < 0 or end > self.features.shape[0]:
                raise DatasetError(f"embedded interval [{start}, {end}) outside {self.features.shape[0]} frames")

    @property
    def classes(self) -> tuple[str, ...]:
        present = [self.embedded[0]] if self.embedded else []
        return (*present, *(class_id for class_id, _ in self.distractors))


def make_template(class_id: str, seed: int, channels: int = SEQUENCE_CHANNELS, frames: tuple[int, int] = TEMPLATE_FRAMES) -> ClassTemplate:
    """A smooth random trajectory through a few Gaussian control points."""
    rng = np.random.default_rng(seed)
    length = int(rng.integers(frames[0], frames[1] + 1))
    control = rng.normal(0.0, 1.0, size=(CONTROL_POINTS, channels))
    spline = CubicSpline(np.arange(CONTROL_POINTS), control, axis=0)
    return ClassTemplate(class_id, spline(np.linspace(0.0, CONTROL_POINTS - 1, length)))


def time_warp(frames: np.ndarray, length: int) -> np.ndarray:
    """Linearly resample ``(frames, channels)`` to ``length`` frames."""
    positions = np.linspace(0.0, frames.shape[0] - 1, length)
    source = np.arange(frames.shape[0])
    return np.stack([np.interp(positions, source, frames[:, c]) for c in range(frames.shape[1])], axis=1)


def warped_instance(
    template: ClassTemplate, rng: np.random.Generator, warp: float | None = None, noise_std: float = INSERT_NOISE
) -> np.ndarray:
    """One spoken instance: time-warped template plus Gaussian noise."""
    factor = rng.uniform(*WARP_RANGE) if warp is None else warp
    frames = time_warp(template.frames, max(1, round(template.length * factor)))
    if noise_std > 0.0:
        frames = frames + rng.normal(0.0, noise_std, size=frames.shape)
    return frames


def compose_utterance(
    keyword: ClassTemplate | None,
    distractors: Sequence[ClassTemplate],
    length: int,
    channels: int,
    rng: np.random.Generator,
    warp: float | None = None,
    noise_std: float = INSERT_NOISE,
    background: float = BACKGROUND_SCALE,
) -> SequenceTarget:
    """Smoothed-noise utterance holding warped instances of the given templates.

    ``warp`` fixes the keyword's warp factor; distractors are always drawn at
    random. Segments replace the background frames they cover and never overlap.
    """
    features = background * gaussian_filter1d(rng.normal(size=(length, channels)), sigma=2.0, axis=0)
    segments = [(keyword.class_id, warped_instance(keyword, rng, warp, noise_std))] if keyword else []
    segments += [(d.class_id, warped_instance(d, rng, None, noise_std)) for d in distractors]
    free = length - sum(len(frames) for _, frames in segments)
    if free < 0:
        raise DatasetError(f"{len(segments)} segments do not fit a {length}-frame target")

    gaps = rng.multinomial(free, [1.0 / (len(segments) + 1)] * (len(segments) + 1))
    placed = {}
    cursor = 0
    for gap, which in zip(gaps, rng.permutation(len(segments))):
        class_id, frames = segments[which]
        cursor += int(gap)
        features[cursor:cursor + len(frames)] = frames
        placed[class_id] = Box((float(cursor),), (float(len(frames)),))
        cursor += len(frames)

    embedded = (keyword.class_id, placed[keyword.class_id]) if keyword else None
    return SequenceTarget(features, embedded, tuple((d.class_id, placed[d.class_id]) for d in distractors))


def gen_sequence_target(
    template: ClassTemplate,
    contains: bool,
    length: int,
    rng: np.random.Generator,
    distractors: Sequence[ClassTemplate] = (),
    warp: float | None = None,
    noise_std: float = INSERT_NOISE,
) -> SequenceTarget:
    """An utterance that holds ``template`` iff ``contains``; distractors of other classes either way."""
    if template.length >= length:
        raise DatasetError(f"template of {template.length} frames does not fit a {length}-frame target")
    if any(d.class_id == template.class_id for d in distractors):
        raise DatasetError(f"class {template.class_id!r} cannot be its own distractor")
    return compose_utterance(template if contains else None, distractors, length, template.frames.shape[1], rng, warp, noise_std)


class SequenceSource:
    """Keyword classes, each with its own template."""

    def __init__(self, seed: int, class_count: int, channels: int = SEQUENCE_CHANNELS, frames: tuple[int, int] = TEMPLATE_FRAMES):
        if class_count < 1:
            raise ValueError("need at least one class")
        self.seed = seed
        self.channels = channels
        self.frames = frames
        self.class_ids = tuple(f"word-{i:04d}" for i in range(class_count))
        self._templates = {
            class_id: make_template(class_id, class_seed(seed, i), channels, frames) for i, class_id in enumerate(self.class_ids)
        }

    def template(self, class_id: str) -> ClassTemplate:
        return self._templates[class_id]
