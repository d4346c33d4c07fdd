"""Baselines: DTW keyword scanning, the HOG exemplar classifier and random guessing."""

from simdet.baselines.chance import ChanceScorer
from simdet.baselines.dtw import DtwConfig, DtwScorer, dtw_cost, dtw_scan, dtw_similarity, frame_distances
from simdet.baselines.exemplar import (
    ExemplarClassifier,
    ExemplarClfConfig,
    ExemplarScorer,
    exemplar_scan,
    logistic_objective,
    train_exemplar_classifier,
)
from simdet.baselines.hog import HogConfig, cell_histograms, hog_features

__all__ = [
    "ChanceScorer",
    "DtwConfig",
    "DtwScorer",
    "ExemplarClassifier",
    "ExemplarClfConfig",
    "ExemplarScorer",
    "HogConfig",
    "cell_histograms",
    "dtw_cost",
    "dtw_scan",
    "dtw_similarity",
    "exemplar_scan",
    "frame_distances",
    "hog_features",
    "logistic_objective",
    "train_exemplar_classifier",
]
