"""Detection emission, calibration and the pooled-AP evaluation protocol."""

from simdet.evalkit.boxes import Box, iou
from simdet.evalkit.calibration import calibrate_candidates, calibrate_postprocess
from simdet.evalkit.detections import (
    Candidate,
    Detection,
    EpisodeScorer,
    GroundTruth,
    PostprocessParams,
    apply_postprocess,
    emit_detections,
    score_candidates,
)
from simdet.evalkit.metrics import ap_iou_sweep, average_precision, pr_curve, precision_at_recall
from simdet.evalkit.report import EvalReport, evaluate_candidates, write_report

__all__ = [
    "Box",
    "Candidate",
    "Detection",
    "EpisodeScorer",
    "EvalReport",
    "GroundTruth",
    "PostprocessParams",
    "ap_iou_sweep",
    "apply_postprocess",
    "average_precision",
    "calibrate_candidates",
    "calibrate_postprocess",
    "emit_detections",
    "evaluate_candidates",
    "iou",
    "pr_curve",
    "precision_at_recall",
    "score_candidates",
    "write_report",
]
