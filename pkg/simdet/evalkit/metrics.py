"""Pooled average precision, precision at recall, and the AP-vs-IoU sweep."""

from __future__ import annotations

import math
from typing import TYPE_CHECKING

import numpy as np

from simdet.errors import DatasetError
from simdet.evalkit.boxes import iou

if TYPE_CHECKING:
    from collections.abc import Iterable, Mapping, Sequence

    from simdet.evalkit.detections import Candidate, Detection, GroundTruth

RECALL_LEVELS = (0.5, 0.9, 0.99)
SWEEP_THRESHOLDS = (0.2, 0.3, 0.4, 0.5)


def _index(truths: Iterable[GroundTruth]) -> dict[int, GroundTruth]:
    return {truth.episode_id: truth for truth in truths}


def _ranked(detections: Iterable[Detection | Candidate]) -> list[Detection | Candidate]:
    """Descending confidence; equal confidences by ascending episode id."""
    return sorted(detections, key=lambda d: (-d.confidence, d.episode_id))


def match_detections(detections: Iterable[Detection], truths: Mapping[int, GroundTruth], iou_threshold: float) -> np.ndarray:
    """True-positive flag per detection in ranked order; each truth box matches at most once."""
    matched: set[int] = set()
    flags = []
    for detection in _ranked(detections):
        try:
            truth = truths[detection.episode_id]
        except KeyError:
            raise DatasetError(f"detection for unknown episode {detection.episode_id}") from None
        hit = (
            truth.label == 1
            and truth.episode_id not in matched
            and truth.box.rank == detection.box.rank
            and iou(detection.box, truth.box) >= iou_threshold
        )
        if hit:
            matched.add(truth.episode_id)
        flags.append(hit)
    return np.array(flags, dtype=bool)


def _precision_envelope(flags: np.ndarray) -> np.ndarray:
    precision = np.cumsum(flags) / np.arange(1, len(flags) + 1)
    return np.maximum.accumulate(precision[::-1])[::-1]


def _positives(truths: Mapping[int, GroundTruth]) -> int:
    return sum(1 for truth in truths.values() if truth.label == 1)


def average_precision(detections: Iterable[Detection], truths: Iterable[GroundTruth], iou_threshold: float = 0.5) -> float:
    """All-point interpolated AP over every episode of the set at once.

    Recall is measured against all positive episodes, emitted or not.
    """
    truths = _index(truths)
    positives = _positives(truths)
    flags = match_detections(detections, truths, iou_threshold)
    if positives == 0 or not flags.any():
        return 0.0
    envelope = _precision_envelope(flags)
    return math.fsum(envelope[flags]) / positives


def pr_curve(
    detections: Iterable[Detection], truths: Iterable[GroundTruth], iou_threshold: float = 0.5
) -> tuple[list[float], list[float]]:
    """(recall, precision) after each ranked detection."""
    truths = _index(truths)
    positives = _positives(truths)
    flags = match_detections(detections, truths, iou_threshold)
    if positives == 0 or flags.size == 0:
        return [], []
    hits = np.cumsum(flags)
    recall = hits / positives
    precision = hits / np.arange(1, len(flags) + 1)
    return recall.tolist(), precision.tolist()


def precision_at_recall(
    candidates: Iterable[Candidate], truths: Iterable[GroundTruth], levels: Sequence[float] = RECALL_LEVELS
) -> dict[float, float]:
    """Envelope precision at the first rank whose recall reaches each level.

    This is the pair-classification view: a candidate counts as correct when
    its episode is positive, whatever its box. Unreachable levels give 0.
    """
    truths = _index(truths)
    positives = _positives(truths)
    ranked = _ranked(candidates)
    unknown = [c.episode_id for c in ranked if c.episode_id not in truths]
    if unknown:
        raise DatasetError(f"candidates for unknown episodes {unknown[:5]}")
    flags = np.array([truths[c.episode_id].label == 1 for c in ranked], dtype=bool)
    if positives == 0 or not flags.any():
        return {level: 0.0 for level in levels}
    envelope = _precision_envelope(flags)
    recall = np.cumsum(flags) / positives
    result = {}
    for level in levels:
        reached = np.flatnonzero(recall >= level)
        result[level] = float(envelope[reached[0]]) if reached.size else 0.0
    return result


def ap_iou_sweep(
    detections: Sequence[Detection], truths: Sequence[GroundTruth], thresholds: Sequence[float] = SWEEP_THRESHOLDS
) -> dict[float, float]:
    return {threshold: average_precision(detections, truths, threshold) for threshold in thresholds}
