"""Evaluation reports and their JSON form."""

from __future__ import annotations

import dataclasses
import json
from typing import TYPE_CHECKING

from simdet.evalkit.detections import apply_postprocess
from simdet.evalkit.metrics import RECALL_LEVELS, average_precision, pr_curve, precision_at_recall

if TYPE_CHECKING:
    from collections.abc import Mapping, Sequence
    from pathlib import Path

    from simdet.evalkit.detections import Candidate, Detection, GroundTruth, PostprocessParams


@dataclasses.dataclass(frozen=True)
class EvalReport:
    """Metrics of one model on one N-way evaluation set, with the constants it was calibrated to."""

    n_way: int
    iou_threshold: float
    ap: float
    precision_at_recall: dict[float, float]
    recall: list[float]
    precision: list[float]
    params: PostprocessParams

    def __post_init__(self):
        values = [self.ap, *self.precision_at_recall.values(), *self.recall, *self.precision]
        if any(not 0.0 <= v <= 1.0 for v in values):
            raise ValueError(f"{self.n_way}-way report has values outside [0, 1]")

    @property
    def set_name(self) -> str:
        return f"{self.n_way}-way"

    def metrics(self) -> dict[str, float]:
        row = {"AP": self.ap}
        for level in sorted(self.precision_at_recall):
            row[f"Pr@{level:g}"] = self.precision_at_recall[level]
        return row


def evaluate_candidates(
    n_way: int,
    candidates: Sequence[Candidate],
    truths: Sequence[GroundTruth],
    extents: Mapping[int, tuple[int, ...]],
    params: PostprocessParams,
    iou_threshold: float = 0.5,
    recall_levels: Sequence[float] = RECALL_LEVELS,
) -> tuple[EvalReport, list[Detection]]:
    """Emit detections with calibrated ``params`` and measure them.

    AP and the curve use the emitted detections; precision at recall ranks
    the unthresholded candidates.
    """
    detections = apply_postprocess(candidates, params, extents)
    recall, precision = pr_curve(detections, truths, iou_threshold)
    report = EvalReport(
        n_way,
        iou_threshold,
        average_precision(detections, truths, iou_threshold),
        precision_at_recall(candidates, truths, recall_levels),
        recall,
        precision,
        params,
    )
    return report, detections


def report_document(model: str, track: str, reports: Sequence[EvalReport]) -> dict:
    """Report metrics per set; calibration and curves sit in their own sections, keyed the same way."""
    return {
        "model": model,
        "track": track,
        "iou_threshold": reports[0].iou_threshold if reports else None,
        "calibration": {report.set_name: dataclasses.asdict(report.params) for report in reports},
        "sets": {report.set_name: report.metrics() for report in reports},
        "curves": {report.set_name: {"recall": report.recall, "precision": report.precision} for report in reports},
    }


def dumps_report(model: str, track: str, reports: Sequence[EvalReport]) -> str:
    return json.dumps(report_document(model, track, reports), indent=2, sort_keys=True) + "\n"


def write_report(path: Path, model: str, track: str, reports: Sequence[EvalReport]) -> None:
    path.write_text(dumps_report(model, track, reports), encoding="utf-8")
