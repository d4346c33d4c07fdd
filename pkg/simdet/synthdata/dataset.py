"""Whole datasets: building every episode set of a run and the on-disk layout.

A dataset directory holds ``manifest.json`` (track, seed, splits and the
episode metadata of each set), one ``<set>.simd`` tensor file per set with
``exemplar/<episode id>`` and ``target/<target id>`` entries, one
``<set>-truth.csv`` ground-truth file per set, and for the image track a
``negatives.simd`` file with the training instances of every training class.
"""

from __future__ import annotations

import dataclasses
import json
import logging
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np

from simdet.errors import CheckpointError, DatasetError
from simdet.evalkit.detections import GroundTruth, read_ground_truth, write_ground_truth
from simdet.simnet.episode import Episode
from simdet.synthdata.episodes import build_nway_eval, build_training_pairs
from simdet.synthdata.splits import SplitSpec
from simdet.tensorcore.checkpoint import read_tensors, write_tensors

if TYPE_CHECKING:
    from collections.abc import Sequence

    from simdet.synthdata.corpus import ImageSource
    from simdet.synthdata.episodes import Track

logger = logging.getLogger(__name__)

MANIFEST = "manifest.json"
NEGATIVES = "negatives.simd"
FORMAT_VERSION = 1

TRAIN_PAIRS = "train-pairs"
VALIDATION_PAIRS = "validation-pairs"


def nway_set_name(split: str, n_way: int) -> str:
    return f"{split}-{n_way}way"


@dataclasses.dataclass(frozen=True, eq=False)
class EpisodeSet:
    name: str
    split: str
    episodes: tuple[Episode, ...]
    n_way: int | None = None

    @property
    def truths(self) -> list[GroundTruth]:
        return [GroundTruth.from_episode(e) for e in self.episodes]

    def __len__(self) -> int:
        return len(self.episodes)


@dataclasses.dataclass(frozen=True, eq=False)
class Dataset:
    track: str
    seed: int
    split: SplitSpec
    sets: dict[str, EpisodeSet]
    grid_size: int | None = None
    n_ways: tuple[int, ...] = ()
    negatives: dict[str, np.ndarray] = dataclasses.field(default_factory=dict)

    @property
    def spatial_rank(self) -> int:
        return 2 if self.track == "image" else 1

    def episode_set(self, name: str) -> EpisodeSet:
        try:
            return self.sets[name]
        except KeyError:
            raise DatasetError(f"dataset has no {name!r} set; available: {', '.join(sorted(self.sets))}") from None

    def nway(self, split: str, n_way: int) -> EpisodeSet:
        return self.episode_set(nway_set_name(split, n_way))


def build_dataset(
    track: Track,
    split: SplitSpec,
    seed: int,
    train_pairs: int,
    eval_targets: int,
    n_ways: Sequence[int],
    grid_size: int | None = None,
    negatives_source: ImageSource | None = None,
    negatives_per_class: int = 0,
) -> Dataset:
    """Every set of a run: balanced pairs for train and validation, N-way sets for validation and test.

    Each set draws from its own seed stream, so adding an N value never
    changes the episodes of the other sets. ``negatives`` maps each training
    class to its first ``negatives_per_class`` instances stacked on axis 0;
    0 takes them all.
    """
    sets = {}
    streams = {TRAIN_PAIRS: ("train", 0), VALIDATION_PAIRS: ("validation", 1)}
    for name, (split_name, stream) in streams.items():
        count = train_pairs if split_name == "train" else max(2, train_pairs // 4 // 2 * 2)
        episodes = build_training_pairs(track, split.classes(split_name), count, seed, stream)
        sets[name] = EpisodeSet(name, split_name, tuple(episodes))
    for n_way in n_ways:
        for stream_base, split_name in ((100, "validation"), (200, "test")):
            name = nway_set_name(split_name, n_way)
            episodes = build_nway_eval(track, split.classes(split_name), n_way, eval_targets, seed, stream_base + n_way)
            sets[name] = EpisodeSet(name, split_name, tuple(episodes), n_way)

    negatives = {}
    if negatives_source is not None:
        negatives = {
            class_id: collect_negatives(negatives_source, class_id, negatives_per_class) for class_id in split.train
        }
    return Dataset(track.name, seed, split, sets, grid_size, tuple(n_ways), negatives)


def collect_negatives(source: ImageSource, class_id: str, per_class: int = 0) -> np.ndarray:
    count = source.instances(class_id)
    if per_class:
        count = min(count, per_class)
    return np.stack([source.instance(class_id, index) for index in range(count)])


def _manifest(dataset: Dataset) -> dict:
    sets = {}
    for name, episode_set in dataset.sets.items():
        sets[name] = {
            "split": episode_set.split,
            "n_way": episode_set.n_way,
            "episodes": [
                {"id": e.episode_id, "class": e.class_id, "target": e.target_id, "label": e.label}
                for e in episode_set.episodes
            ],
        }
    return {
        "format": FORMAT_VERSION,
        "track": dataset.track,
        "seed": dataset.seed,
        "grid_size": dataset.grid_size,
        "n_way": list(dataset.n_ways),
        "splits": dataset.split.as_dict(),
        "sets": sets,
        "negatives": sorted(dataset.negatives),
    }


def write_dataset(directory: Path, dataset: Dataset) -> Path:
    directory = Path(directory)
    try:
        directory.mkdir(parents=True, exist_ok=True)
    except OSError as err:
        raise DatasetError(f"cannot create dataset directory: {err.strerror}", directory) from None

    for name, episode_set in dataset.sets.items():
        tensors = {}
        for e in episode_set.episodes:
            tensors[f"exemplar/{e.episode_id}"] = e.exemplar
            tensors.setdefault(f"target/{e.target_id}", e.target)
        write_tensors(directory / f"{name}.simd", tensors)
        write_ground_truth(directory / f"{name}-truth.csv", episode_set.truths, dataset.spatial_rank)
    if dataset.negatives:
        write_tensors(directory / NEGATIVES, {f"negative/{c}": v for c, v in sorted(dataset.negatives.items())})

    manifest = json.dumps(_manifest(dataset), sort_keys=True, indent=2) + "\n"
    (directory / MANIFEST).write_text(manifest, encoding="utf-8")
    logger.info("wrote %d episode sets to %s", len(dataset.sets), directory)
    return directory / MANIFEST


def _read_set(directory: Path, name: str, entry: dict) -> EpisodeSet:
    try:
        tensors = read_tensors(directory / f"{name}.simd")
    except CheckpointError as err:
        raise DatasetError(f"episode set {name!r}: {err}", directory) from None
    try:
        truths = {t.episode_id: t for t in read_ground_truth(directory / f"{name}-truth.csv")}
    except FileNotFoundError:
        raise DatasetError(f"episode set {name!r} has no ground-truth file", directory) from None
    episodes = []
    for meta in entry["episodes"]:
        episode_id, target_id = int(meta["id"]), int(meta["target"])
        try:
            exemplar, target = tensors[f"exemplar/{episode_id}"], tensors[f"target/{target_id}"]
            truth = truths[episode_id]
        except KeyError as err:
            raise DatasetError(f"episode set {name!r} is missing {err.args[0]!r} for episode {episode_id}", directory) from None
        if truth.label != meta["label"]:
            raise DatasetError(f"episode {episode_id} of {name!r}: manifest and ground truth disagree on the label", directory)
        episodes.append(Episode(episode_id, exemplar, target, truth.label, meta["class"], target_id, truth.box))
    return EpisodeSet(name, entry["split"], tuple(episodes), entry["n_way"])


def read_dataset(directory: Path) -> Dataset:
    directory = Path(directory)
    try:
        manifest = json.loads((directory / MANIFEST).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise DatasetError(f"no {MANIFEST}; run the synth command first", directory) from None
    except json.JSONDecodeError as err:
        raise DatasetError(f"{MANIFEST} is not valid JSON: {err}", directory) from None
    if manifest.get("format") != FORMAT_VERSION:
        raise DatasetError(f"unsupported dataset format {manifest.get('format')!r}", directory)

    splits = manifest["splits"]
    split = SplitSpec(tuple(splits["train"]), tuple(splits["validation"]), tuple(splits["test"]))
    sets = {name: _read_set(directory, name, entry) for name, entry in sorted(manifest["sets"].items())}
    negatives = {}
    if manifest["negatives"]:
        try:
            stored = read_tensors(directory / NEGATIVES)
        except CheckpointError as err:
            raise DatasetError(f"negatives: {err}", directory) from None
        negatives = {name.removeprefix("negative/"): value for name, value in stored.items()}
    return Dataset(
        manifest["track"], manifest["seed"], split, sets, manifest["grid_size"], tuple(manifest["n_way"]), negatives,
    )
