"""Training pairs and N-way evaluation sets for both tracks."""

from __future__ import annotations

import dataclasses
from typing import TYPE_CHECKING, Protocol

import numpy as np

from simdet.errors import DatasetError
from simdet.simnet.episode import Episode
from simdet.synthdata.sequences import INSERT_NOISE, SEQUENCE_FRAMES, compose_utterance, warped_instance
from simdet.synthdata.tiling import tile_target

if TYPE_CHECKING:
    from collections.abc import Sequence

    from simdet.evalkit.boxes import Box
    from simdet.synthdata.corpus import ImageSource
    from simdet.synthdata.sequences import SequenceSource


@dataclasses.dataclass(frozen=True, eq=False)
class DrawnTarget:
    """A generated target with its bookkeeping; ``instances`` lists the tile renderings used."""

    array: np.ndarray
    boxes: dict[str, Box]
    instances: dict[str, int] = dataclasses.field(default_factory=dict)

    @property
    def classes(self) -> tuple[str, ...]:
        return tuple(self.boxes)


class Track(Protocol):
    name: str
    spatial_rank: int

    def target_class_count(self, keyword: bool) -> int: ...

    def draw_target(self, rng: np.random.Generator, classes: Sequence[str], keyword: str | None) -> DrawnTarget: ...

    def draw_exemplar(self, rng: np.random.Generator, class_id: str, target: DrawnTarget) -> np.ndarray: ...


def _pick(rng: np.random.Generator, pool: Sequence[str], count: int, exclude: Sequence[str] = ()) -> list[str]:
    candidates = [c for c in pool if c not in exclude]
    if count > len(candidates):
        raise DatasetError(f"need {count} classes outside {len(exclude)} excluded, only {len(candidates)} available")
    return [candidates[i] for i in rng.choice(len(candidates), size=count, replace=False)]


class ImageTrack:
    """n×n tiled targets; every target holds n² distinct classes."""

    name = "image"
    spatial_rank = 2

    def __init__(self, source: ImageSource, grid_size: int):
        self.source = source
        self.grid_size = grid_size

    def target_class_count(self, keyword: bool) -> int:
        return self.grid_size ** 2

    def draw_target(self, rng: np.random.Generator, classes: Sequence[str], keyword: str | None) -> DrawnTarget:
        cells = self.grid_size ** 2
        chosen = [keyword, *_pick(rng, classes, cells - 1, (keyword,))] if keyword else _pick(rng, classes, cells)
        instances = {c: int(rng.integers(self.source.instances(c))) for c in chosen}
        tiled = tile_target([(c, self.source.instance(c, instances[c])) for c in chosen], self.grid_size, rng)
        boxes = {cell.class_id: cell.box for cell in tiled.cells}
        return DrawnTarget(tiled.image[np.newaxis], boxes, instances)

    def draw_exemplar(self, rng: np.random.Generator, class_id: str, target: DrawnTarget) -> np.ndarray:
        count = self.source.instances(class_id)
        used = target.instances.get(class_id)
        choices = [i for i in range(count) if i != used]
        if not choices:
            raise DatasetError(f"class {class_id!r} has a single instance; exemplar and target would coincide")
        return self.source.instance(class_id, choices[int(rng.integers(len(choices)))])[np.newaxis]


class SequenceTrack:
    """Fixed-length utterances with an optional keyword and distractor words."""

    name = "sequence"
    spatial_rank = 1

    def __init__(self, source: SequenceSource, frames: int = SEQUENCE_FRAMES, distractors: int = 1, noise_std: float = INSERT_NOISE):
        self.source = source
        self.frames = frames
        self.distractors = distractors
        self.noise_std = noise_std

    def target_class_count(self, keyword: bool) -> int:
        return self.distractors + (1 if keyword else 0)

    def draw_target(self, rng: np.random.Generator, classes: Sequence[str], keyword: str | None) -> DrawnTarget:
        others = _pick(rng, classes, self.distractors, (keyword,) if keyword else ())
        target = compose_utterance(
            self.source.template(keyword) if keyword else None,
            [self.source.template(c) for c in others],
            self.frames,
            self.source.channels,
            rng,
            noise_std=self.noise_std,
        )
        boxes = dict(target.distractors)
        if target.embedded:
            boxes = {target.embedded[0]: target.embedded[1], **boxes}
        return DrawnTarget(target.features.T.copy(), boxes)

    def draw_exemplar(self, rng: np.random.Generator, class_id: str, target: DrawnTarget) -> np.ndarray:
        return warped_instance(self.source.template(class_id), rng, None, self.noise_std).T.copy()


def episode_rng(seed: int, stream: int, index: int) -> np.random.Generator:
    """Per-target generator; episodes never depend on generation order."""
    return np.random.default_rng(np.random.SeedSequence([seed, stream, index]))


def build_training_pairs(track: Track, classes: Sequence[str], count: int, seed: int, stream: int = 0) -> list[Episode]:
    """``count`` balanced pairs, each with its own target; even ids are positive."""
    if count % 2:
        raise DatasetError(f"training pair count must be even, got {count}")
    if not classes:
        raise DatasetError("cannot build training pairs from an empty split")
    if len(classes) < track.target_class_count(False) + 1:
        raise DatasetError(f"{len(classes)} classes cannot form negative pairs for the {track.name} track")
    episodes = []
    for index in range(count):
        rng = episode_rng(seed, stream, index)
        if index % 2 == 0:
            keyword = _pick(rng, classes, 1)[0]
            target = track.draw_target(rng, classes, keyword)
            exemplar_class, label = keyword, 1
        else:
            target = track.draw_target(rng, classes, None)
            exemplar_class, label = _pick(rng, classes, 1, target.classes)[0], 0
        exemplar = track.draw_exemplar(rng, exemplar_class, target)
        box = target.boxes[exemplar_class] if label else None
        episodes.append(Episode(index, exemplar, target.array, label, exemplar_class, index, box))
    return episodes


def nway_class_requirement(track: Track, n_way: int) -> int:
    return track.target_class_count(True) + n_way - 1


def build_nway_eval(
    track: Track, classes: Sequence[str], n_way: int, targets: int, seed: int, stream: int = 1
) -> list[Episode]:
    """``targets`` targets, each paired with one positive and ``n_way`` − 1 negative exemplars.

    Negative exemplar classes never occur anywhere in their target.
    """
    if n_way < 1 or targets < 1:
        raise DatasetError(f"need positive N and target count, got N={n_way}, targets={targets}")
    needed = nway_class_requirement(track, n_way)
    if needed > len(classes):
        raise DatasetError(f"{n_way}-way evaluation on the {track.name} track needs {needed} classes, split has {len(classes)}")
    episodes = []
    for target_id in range(targets):
        rng = episode_rng(seed, stream, target_id)
        keyword = _pick(rng, classes, 1)[0]
        target = track.draw_target(rng, classes, keyword)
        negatives = _pick(rng, classes, n_way - 1, target.classes)
        order = rng.permutation(n_way)
        exemplar_classes = [keyword, *negatives]
        for slot in range(n_way):
            class_id = exemplar_classes[order[slot]]
            label = int(class_id == keyword)
            exemplar = track.draw_exemplar(rng, class_id, target)
            episodes.append(Episode(
                len(episodes), exemplar, target.array, label, class_id, target_id,
                target.boxes[keyword] if label else None,
            ))
    return episodes
