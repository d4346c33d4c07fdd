import numpy as np
import pytest

from simdet.baselines.exemplar import (
    ExemplarClfConfig,
    ExemplarScorer,
    logistic_objective,
    train_exemplar_classifier,
    window_features,
)
from simdet.errors import ConvergenceError, ShapeError
from simdet.evalkit.boxes import Box
from simdet.simnet.episode import Episode
from simdet.synthdata.glyphs import GlyphSource
from simdet.tensorcore.gradcheck import relative_error


def test_objective_gradient_matches_finite_differences():
    rng = np.random.default_rng(0)
    features = np.hstack([rng.normal(size=(6, 3)), np.ones((6, 1))])
    labels = np.array([1.0, 0, 0, 0, 0, 0])
    weights = rng.normal(size=4)
    _, gradient = logistic_objective(weights, features, labels)
    numeric = np.zeros(4)
    for i in range(4):
        step = np.zeros(4)
        step[i] = 1e-6
        numeric[i] = (logistic_objective(weights + step, features, labels)[0]
                      - logistic_objective(weights - step, features, labels)[0]) / 2e-6
    assert relative_error(gradient, numeric) < 1e-6


def test_separable_toy_set():
    rng = np.random.default_rng(1)
    negatives = rng.normal(-1.0, 0.3, size=(40, 2))
    classifier = train_exemplar_classifier(np.array([2.0, 2.0]), negatives)
    assert classifier.converged
    assert classifier.objective_trace[-1] < classifier.objective_trace[0]
    assert classifier.decision(np.array([2.0, 2.0]))[0] > classifier.decision(negatives).max()


@pytest.mark.parametrize("seed", range(5))
def test_objective_trace_never_increases(seed):
    rng = np.random.default_rng(seed)
    negatives = rng.normal(size=(30, 6))
    classifier = train_exemplar_classifier(rng.normal(size=6), negatives)
    trace = np.array(classifier.objective_trace)
    assert len(trace) >= 2
    assert np.all(np.diff(trace) <= 1e-12 * abs(trace[0]))


def test_rescaled_costs_keep_the_hardest_negative():
    rng = np.random.default_rng(3)
    negatives = np.vstack([rng.normal(-1.0, 0.3, size=(40, 2)), [[1.0, 1.5]]])
    positive = np.array([2.0, 2.0])
    base = train_exemplar_classifier(positive, negatives)
    rescaled = train_exemplar_classifier(positive, negatives, ExemplarClfConfig(
        positive_weight=20.0, negative_weight=2e-4, regularization=0.5))
    assert base.converged and rescaled.converged
    assert int(np.argmax(base.decision(negatives))) == 40
    assert int(np.argmax(rescaled.decision(negatives))) == 40


def test_stopping_early_warns_or_raises(caplog):
    negatives = np.random.default_rng(1).normal(-1.0, 0.3, size=(40, 2))
    classifier = train_exemplar_classifier(np.array([2.0, 2.0]), negatives, ExemplarClfConfig(max_iterations=1))
    assert not classifier.converged
    assert "exemplar classifier stopped" in caplog.text
    with pytest.raises(ConvergenceError, match="stopped at gradient norm"):
        train_exemplar_classifier(np.array([2.0, 2.0]), negatives, ExemplarClfConfig(max_iterations=1, strict=True))


def test_needs_negatives_of_matching_width():
    with pytest.raises(ShapeError, match="at least one negative"):
        train_exemplar_classifier(np.ones(3), np.zeros((0, 3)))
    with pytest.raises(ShapeError, match="features"):
        train_exemplar_classifier(np.ones(3), np.zeros((2, 4)))


def test_window_grid_for_a_two_by_two_target():
    features = window_features(np.zeros((64, 64)))
    assert features.shape == (9, 9, 1764)


def test_exact_exemplar_wins_its_cell():
    source = GlyphSource(seed=0, class_count=8, instances=4)
    classes = source.class_ids
    tiles = [source.instance(c, 1) for c in classes[:4]]
    target = np.block([[tiles[0], tiles[1]], [tiles[2], tiles[3]]])
    scorer = ExemplarScorer.from_images([source.instance(c, 0) for c in classes[4:]],
                                        classifier=ExemplarClfConfig(max_iterations=500))
    episode = Episode(0, tiles[2][np.newaxis], target[np.newaxis], 1, classes[2], 0, Box((32.0, 0.0), (32.0, 32.0)))
    (candidate,) = scorer.score_target([episode])
    assert candidate.box == Box((32.0, 0.0), (32.0, 32.0))
