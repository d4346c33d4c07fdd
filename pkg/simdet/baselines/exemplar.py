"""Per-exemplar linear classifier on HOG features, scanned over the target."""

from __future__ import annotations

import dataclasses
import logging
from typing import TYPE_CHECKING

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.optimize import minimize
from scipy.special import expit, log_expit

from simdet.baselines.hog import HogConfig, hog_features
from simdet.errors import ConvergenceError, ShapeError
from simdet.evalkit.detections import Candidate, candidate_from_map
from simdet.simnet.maps import SimilarityMap, StridedGeometry
from simdet.tensorcore.tensor import Tensor

if TYPE_CHECKING:
    from collections.abc import Sequence

    from simdet.simnet.episode import Episode

logger = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True)
class ExemplarClfConfig:
    """Class-weighted L2-regularised logistic regression, liblinear style.

    Objective: ½·reg·‖w‖² + C₊ Σ₊ log(1 + e^{−z}) + C₋ Σ₋ log(1 + e^{z}),
    z = w·[x, bias]. The bias feature is regularised like any other.
    """

    positive_weight: float = 10.0
    negative_weight: float = 1e-4
    regularization: float = 1.0
    bias: float = 1.0
    tolerance: float = 1e-6
    max_iterations: int = 5000
    strict: bool = False

    def __post_init__(self):
        if not (self.positive_weight > 0.0 and self.negative_weight > 0.0):
            raise ValueError("class weights must be positive")
        if self.regularization < 0.0:
            raise ValueError(f"regularisation must be nonnegative, got {self.regularization}")


@dataclasses.dataclass(frozen=True)
class ExemplarClassifier:
    weights: np.ndarray
    bias: float
    converged: bool
    iterations: int
    objective_trace: tuple[float, ...]

    def decision(self, features: np.ndarray) -> np.ndarray:
        features = np.atleast_2d(features)
        return features @ self.weights[:-1] + self.bias * self.weights[-1]


def _augment(features: np.ndarray, bias: float) -> np.ndarray:
    return np.hstack([features, np.full((features.shape[0], 1), bias)])


def logistic_objective(
    weights: np.ndarray, features: np.ndarray, labels: np.ndarray, config: ExemplarClfConfig = ExemplarClfConfig()
) -> tuple[float, np.ndarray]:
    """Objective value and gradient; ``features`` already carry the bias column."""
    z = features @ weights
    positive = labels == 1
    costs = np.where(positive, config.positive_weight, config.negative_weight)
    losses = np.where(positive, -log_expit(z), -log_expit(-z))
    value = 0.5 * config.regularization * float(weights @ weights) + float(costs @ losses)
    gradient = config.regularization * weights + features.T @ (costs * (expit(z) - labels))
    return value, gradient


def train_exemplar_classifier(
    positive: np.ndarray, negatives: np.ndarray, config: ExemplarClfConfig = ExemplarClfConfig()
) -> ExemplarClassifier:
    """Separate one positive feature vector from every negative.

    Solved in the primal with L-BFGS from w = 0; converged means the gradient
    norm reached ``config.tolerance`` within ``config.max_iterations``.
    """
    negatives = np.atleast_2d(np.asarray(negatives, dtype=np.float64))
    positive = np.asarray(positive, dtype=np.float64).reshape(1, -1)
    if negatives.shape[0] == 0:
        raise ShapeError("the exemplar classifier needs at least one negative")
    if negatives.shape[1] != positive.shape[1]:
        raise ShapeError(f"positive has {positive.shape[1]} features, negatives have {negatives.shape[1]}")

    features = _augment(np.vstack([positive, negatives]), config.bias)
    labels = np.zeros(features.shape[0])
    labels[0] = 1.0

    # the solver bounds the largest gradient entry; scaled so the 2-norm meets the tolerance
    gtol = config.tolerance / np.sqrt(features.shape[1])
    trace = [logistic_objective(np.zeros(features.shape[1]), features, labels, config)[0]]

    def record(w):
        trace.append(logistic_objective(w, features, labels, config)[0])

    result = minimize(
        logistic_objective,
        np.zeros(features.shape[1]),
        args=(features, labels, config),
        jac=True,
        method="L-BFGS-B",
        callback=record,
        options={"maxiter": config.max_iterations, "gtol": gtol, "ftol": 0.0},
    )
    gradient_norm = float(np.linalg.norm(result.jac))
    converged = gradient_norm <= config.tolerance
    if not converged:
        message = f"exemplar classifier stopped at gradient norm {gradient_norm:.3g} after {result.nit} iterations"
        if config.strict:
            raise ConvergenceError(message, "exemplar classifier")
        logger.warning(message)
    return ExemplarClassifier(result.x, config.bias, converged, int(result.nit), tuple(trace))


def exemplar_scan(
    classifier: ExemplarClassifier, target: np.ndarray, config: HogConfig = HogConfig(), window: int = 32
) -> SimilarityMap:
    """Logistic score of every ``window``-sized patch on a grid with stride ``config.cell``."""
    return _scan(classifier, window_features(target, config, window), config, window)


def window_features(target: np.ndarray, config: HogConfig = HogConfig(), window: int = 32) -> np.ndarray:
    """HOG vectors of all scanned windows, shape ``(rows, cols, features)``."""
    target = np.asarray(target, dtype=np.float64)
    if target.ndim != 2 or min(target.shape) < window:
        raise ShapeError(f"target of shape {target.shape} cannot hold a {window}×{window} window")
    windows = sliding_window_view(target, (window, window))[:: config.cell, :: config.cell]
    return np.stack([[hog_features(w, config) for w in row] for row in windows])


def _scan(classifier: ExemplarClassifier, features: np.ndarray, config: HogConfig, window: int) -> SimilarityMap:
    rows, cols = features.shape[:2]
    scores = expit(classifier.decision(features.reshape(rows * cols, -1))).reshape(rows, cols)
    geometry = StridedGeometry((rows, cols), (config.cell, config.cell), (window, window))
    return SimilarityMap(Tensor(scores), geometry)


class ExemplarScorer:
    """Trains one classifier per exemplar against a fixed pool of negative HOG vectors.

    Episodes hold ``(1, H, W)`` images. Window features are computed once per target.
    """

    def __init__(
        self,
        negatives: np.ndarray,
        hog: HogConfig = HogConfig(),
        classifier: ExemplarClfConfig = ExemplarClfConfig(),
    ):
        self.negatives = np.asarray(negatives, dtype=np.float64)
        self.hog = hog
        self.classifier = classifier

    @classmethod
    def from_images(cls, images: Sequence[np.ndarray], hog: HogConfig = HogConfig(), **kwargs) -> ExemplarScorer:
        return cls(np.stack([hog_features(image, hog) for image in images]), hog, **kwargs)

    def score_target(self, episodes: Sequence[Episode]) -> list[Candidate]:
        target = episodes[0].target[0]
        window = episodes[0].exemplar.shape[-1]
        features = window_features(target, self.hog, window)
        candidates = []
        for episode in episodes:
            positive = hog_features(episode.exemplar[0], self.hog)
            classifier = train_exemplar_classifier(positive, self.negatives, self.classifier)
            smap = _scan(classifier, features, self.hog, window)
            candidates.append(candidate_from_map(episode, smap, float(smap.values.max())))
        return candidates
