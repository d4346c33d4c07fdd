"""Candidates, detections, ground truth, and turning scorer output into detections."""

from __future__ import annotations

import concurrent.futures
import csv
import dataclasses
from typing import TYPE_CHECKING, Protocol

from simdet.errors import DatasetError
from simdet.evalkit.boxes import Box

if TYPE_CHECKING:
    from collections.abc import Iterable, Mapping, Sequence
    from pathlib import Path

    from simdet.simnet.episode import Episode
    from simdet.simnet.maps import SimilarityMap


@dataclasses.dataclass(frozen=True)
class Candidate:
    """The single unthresholded proposal of one episode: argmax box and ŷ."""

    episode_id: int
    box: Box
    confidence: float


@dataclasses.dataclass(frozen=True)
class Detection:
    episode_id: int
    box: Box
    confidence: float


@dataclasses.dataclass(frozen=True)
class GroundTruth:
    episode_id: int
    label: int
    box: Box | None = None

    def __post_init__(self):
        if self.label not in (0, 1):
            raise DatasetError(f"episode {self.episode_id}: label must be 0 or 1, got {self.label!r}")
        if self.label == 1 and self.box is None:
            raise DatasetError(f"episode {self.episode_id}: positive episode without a truth box")

    @classmethod
    def from_episode(cls, episode: Episode) -> GroundTruth:
        return cls(episode.episode_id, episode.label, episode.truth_box if episode.label else None)


@dataclasses.dataclass(frozen=True)
class PostprocessParams:
    """Emission threshold t and the start/end shifts (a, b) for 1-D boxes."""

    threshold: float = 0.0
    start_shift: int = 0
    end_shift: int = 0

    def __post_init__(self):
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError(f"threshold must lie in [0, 1], got {self.threshold}")

    @property
    def shifts(self) -> bool:
        return bool(self.start_shift or self.end_shift)


class EpisodeScorer(Protocol):
    def score_target(self, episodes: Sequence[Episode]) -> list[Candidate]:
        """Score every episode of one target; all share ``target_id``."""


def candidate_from_map(episode: Episode, smap: SimilarityMap, confidence: float) -> Candidate:
    """The argmax location's box, with the confidence clipped to [0, 1]."""
    return Candidate(episode.episode_id, smap.box(smap.argmax()), min(max(confidence, 0.0), 1.0))


def group_by_target(episodes: Iterable[Episode]) -> list[list[Episode]]:
    groups: dict[int, list[Episode]] = {}
    for episode in episodes:
        groups.setdefault(episode.target_id, []).append(episode)
    return list(groups.values())


def score_candidates(episodes: Sequence[Episode], scorer: EpisodeScorer, workers: int = 1) -> list[Candidate]:
    """Score ``episodes`` target by target, fanning targets out over ``workers`` threads.

    The result follows the order of ``episodes`` whatever the pool does.
    """
    groups = group_by_target(episodes)
    if workers > 1 and len(groups) > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
            scored = list(pool.map(scorer.score_target, groups))
    else:
        scored = [scorer.score_target(group) for group in groups]
    by_id = {candidate.episode_id: candidate for batch in scored for candidate in batch}
    missing = [episode.episode_id for episode in episodes if episode.episode_id not in by_id]
    if missing:
        raise DatasetError(f"scorer returned no candidate for episodes {missing[:5]}")
    return [by_id[episode.episode_id] for episode in episodes]


def apply_postprocess(
    candidates: Iterable[Candidate],
    params: PostprocessParams,
    extents: Mapping[int, tuple[int, ...]],
) -> list[Detection]:
    """Keep candidates with ŷ > t (all of them at t = 0), shift 1-D boxes, clamp to the target.

    Boxes that a shift or the clamp leaves empty are dropped.
    """
    detections = []
    for candidate in candidates:
        if params.threshold > 0.0 and not candidate.confidence > params.threshold:
            continue
        box = candidate.box
        if params.shifts:
            box = box.shifted(params.start_shift, params.end_shift)
            if box is None:
                continue
        box = box.clamped(tuple(float(n) for n in extents[candidate.episode_id]))
        if box is not None:
            detections.append(Detection(candidate.episode_id, box, candidate.confidence))
    return detections


def emit_detections(
    episodes: Sequence[Episode],
    scorer: EpisodeScorer,
    params: PostprocessParams,
    workers: int = 1,
) -> list[Detection]:
    candidates = score_candidates(episodes, scorer, workers)
    return apply_postprocess(candidates, params, {e.episode_id: e.target_extent for e in episodes})


def _box_header(rank: int) -> list[str]:
    return [f"offset_{i}" for i in range(rank)] + [f"extent_{i}" for i in range(rank)]


def write_detections(path: Path, detections: Sequence[Detection], rank: int) -> None:
    with path.open("w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["episode_id", "confidence", *_box_header(rank)])
        for d in sorted(detections, key=lambda d: d.episode_id):
            writer.writerow([d.episode_id, repr(d.confidence), *map(repr, d.box.as_row())])


def read_detections(path: Path) -> list[Detection]:
    with path.open(encoding="utf-8", newline="") as f:
        rows = list(csv.DictReader(f))
    detections = []
    for row in rows:
        values = [float(v) for k, v in row.items() if k.startswith(("offset_", "extent_"))]
        detections.append(Detection(int(row["episode_id"]), Box.from_row(values), float(row["confidence"])))
    return detections


def write_ground_truth(path: Path, truths: Sequence[GroundTruth], rank: int) -> None:
    with path.open("w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["episode_id", "label", *_box_header(rank)])
        for t in sorted(truths, key=lambda t: t.episode_id):
            box = [repr(v) for v in t.box.as_row()] if t.box is not None else [""] * (2 * rank)
            writer.writerow([t.episode_id, t.label, *box])


def read_ground_truth(path: Path) -> list[GroundTruth]:
    with path.open(encoding="utf-8", newline="") as f:
        rows = list(csv.DictReader(f))
    truths = []
    for row in rows:
        values = [v for k, v in row.items() if k.startswith(("offset_", "extent_"))]
        box = Box.from_row([float(v) for v in values]) if all(values) else None
        truths.append(GroundTruth(int(row["episode_id"]), int(row["label"]), box))
    return truths
