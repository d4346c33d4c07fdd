"""Dynamic time warping: alignment cost, similarity and the keyword scan."""

from __future__ import annotations

import dataclasses
from typing import TYPE_CHECKING

import numpy as np
from scipy.spatial.distance import cdist

from simdet.errors import ShapeError
from simdet.evalkit.boxes import Box
from simdet.evalkit.detections import Candidate, candidate_from_map
from simdet.simnet.maps import ExplicitGeometry, SimilarityMap
from simdet.tensorcore.tensor import Tensor

if TYPE_CHECKING:
    from collections.abc import Sequence

    from simdet.simnet.episode import Episode


@dataclasses.dataclass(frozen=True)
class DtwConfig:
    sigma: float = 50.0
    step: int = 1
    length_factors: tuple[float, ...] = (0.75, 1.0, 1.25)

    def __post_init__(self):
        if not self.sigma > 0.0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.step < 1:
            raise ValueError(f"scan step must be at least 1, got {self.step}")
        if not self.length_factors or any(not f > 0.0 for f in self.length_factors):
            raise ValueError(f"segment length factors must be positive, got {self.length_factors}")


def _frames(sequence) -> np.ndarray:
    frames = np.asarray(sequence, dtype=np.float64)
    if frames.ndim == 1:
        frames = frames[:, np.newaxis]
    if frames.ndim != 2 or frames.shape[0] == 0:
        raise ShapeError(f"expected a non-empty (frames, dims) sequence, got shape {frames.shape}")
    return frames


def frame_distances(a, b) -> np.ndarray:
    """Euclidean distance between every frame of ``a`` and every frame of ``b``."""
    return cdist(_frames(a), _frames(b), "euclidean")


def _accumulate(local: np.ndarray) -> np.ndarray:
    """Cumulative cost over the last two axes with steps (1,0), (0,1), (1,1).

    Leading axes are independent problems solved side by side.
    """
    *batch, rows, cols = local.shape
    acc = np.full((*batch, rows + 1, cols + 1), np.inf)
    acc[..., 0, 0] = 0.0
    for i in range(rows):
        for j in range(cols):
            best = np.minimum(np.minimum(acc[..., i, j], acc[..., i, j + 1]), acc[..., i + 1, j])
            acc[..., i + 1, j + 1] = best + local[..., i, j]
    return acc[..., 1:, 1:]


def dtw_cost(a, b) -> float:
    """Minimal sum of Euclidean frame distances over monotone alignment paths."""
    return float(_accumulate(frame_distances(a, b))[-1, -1])


def dtw_similarity(cost: float, sigma: float) -> float:
    if not sigma > 0.0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    return float(np.exp(-cost / sigma))


def segment_lengths(keyword_frames: int, utterance_frames: int, config: DtwConfig) -> list[int]:
    lengths = {max(1, round(f * keyword_frames)) for f in config.length_factors}
    return sorted(n for n in lengths if n <= utterance_frames)


def dtw_scan(keyword, utterance, config: DtwConfig = DtwConfig()) -> SimilarityMap:
    """Similarity of the keyword against every scanned utterance segment.

    Location l is the l-th start frame on the step grid; its score is the best
    over the candidate segment lengths and its box is that best segment.
    """
    keyword, utterance = _frames(keyword), _frames(utterance)
    if len(keyword) >= len(utterance):
        raise ShapeError(f"keyword ({len(keyword)} frames) must be shorter than the utterance ({len(utterance)})")
    full = frame_distances(keyword, utterance)
    starts = np.arange(0, len(utterance), config.step)

    best_score = np.full(len(starts), -1.0)
    best_length = np.zeros(len(starts), dtype=int)
    for length in segment_lengths(len(keyword), len(utterance), config):
        fits = starts[starts + length <= len(utterance)]
        if fits.size == 0:
            continue
        # local[s, i, j] = distance(keyword[i], utterance[start_s + j])
        columns = fits[:, np.newaxis] + np.arange(length)
        local = np.moveaxis(full[:, columns], 1, 0)
        scores = np.exp(-_accumulate(local)[:, -1, -1] / config.sigma)
        where = np.searchsorted(starts, fits)
        better = scores > best_score[where]
        best_score[where[better]] = scores[better]
        best_length[where[better]] = length

    valid = best_length > 0
    boxes = tuple(Box((float(s),), (float(n),)) for s, n in zip(starts[valid], best_length[valid]))
    return SimilarityMap(Tensor(best_score[valid]), ExplicitGeometry(boxes))


class DtwScorer:
    """ŷ = max_l s_l of the DTW scan; episodes hold ``(channels, frames)`` arrays."""

    def __init__(self, config: DtwConfig = DtwConfig()):
        self.config = config

    def score_target(self, episodes: Sequence[Episode]) -> list[Candidate]:
        candidates = []
        for episode in episodes:
            smap = dtw_scan(episode.exemplar.T, episode.target.T, self.config)
            candidates.append(candidate_from_map(episode, smap, float(smap.values.max())))
        return candidates
