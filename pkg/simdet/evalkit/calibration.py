"""Grid search of the emission threshold and 1-D box shifts on validation data."""

from __future__ import annotations

import itertools
import logging
from typing import TYPE_CHECKING

from simdet.errors import DatasetError
from simdet.evalkit.detections import GroundTruth, PostprocessParams, apply_postprocess, score_candidates
from simdet.evalkit.metrics import average_precision

if TYPE_CHECKING:
    from collections.abc import Mapping, Sequence

    from simdet.evalkit.detections import Candidate, EpisodeScorer
    from simdet.simnet.episode import Episode

logger = logging.getLogger(__name__)

THRESHOLD_GRID = tuple(round(0.05 * i, 2) for i in range(20))
SHIFT_GRID = tuple(range(-5, 6))


def _preference(ap: float, params: PostprocessParams) -> tuple:
    # higher AP first; on ties a positive threshold beats t = 0, then the smallest t,
    # then the smallest total shift
    a, b = params.start_shift, params.end_shift
    return (-ap, params.threshold == 0.0, params.threshold, abs(a) + abs(b), a, b)


def calibrate_candidates(
    candidates: Sequence[Candidate],
    truths: Sequence[GroundTruth],
    extents: Mapping[int, tuple[int, ...]],
    iou_threshold: float = 0.5,
    shifts: Sequence[int] = (),
    thresholds: Sequence[float] = THRESHOLD_GRID,
) -> PostprocessParams:
    """Pick (t, a, b) maximising validation AP; ``shifts`` empty means no shift search."""
    if not any(truth.label == 1 for truth in truths):
        raise DatasetError("calibration needs at least one positive validation episode")
    shift_grid = shifts or (0,)
    best, best_key = None, None
    for threshold, a, b in itertools.product(thresholds, shift_grid, shift_grid):
        params = PostprocessParams(threshold, a, b)
        ap = average_precision(apply_postprocess(candidates, params, extents), truths, iou_threshold)
        key = _preference(ap, params)
        if best_key is None or key < best_key:
            best, best_key = params, key
    logger.info("calibrated t=%.2f a=%d b=%d (validation AP %.4f)", best.threshold, best.start_shift, best.end_shift, -best_key[0])
    return best


def calibrate_postprocess(
    episodes: Sequence[Episode],
    scorer: EpisodeScorer,
    iou_threshold: float = 0.5,
    workers: int = 1,
) -> PostprocessParams:
    """Score validation episodes and calibrate; shifts are searched for sequences only."""
    candidates = score_candidates(episodes, scorer, workers)
    truths = [GroundTruth.from_episode(episode) for episode in episodes]
    extents = {episode.episode_id: episode.target_extent for episode in episodes}
    sequence_track = bool(episodes) and episodes[0].spatial_rank == 1
    return calibrate_candidates(candidates, truths, extents, iou_threshold, SHIFT_GRID if sequence_track else ())
