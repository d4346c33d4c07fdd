import itertools

import numpy as np
import pytest

from simdet.errors import DatasetError
from simdet.evalkit.boxes import Box, iou
from simdet.evalkit.detections import Candidate, Detection, GroundTruth
from simdet.evalkit.metrics import ap_iou_sweep, average_precision, pr_curve, precision_at_recall

TRUTH = Box((10.0,), (20.0,))


def detection(episode_id, confidence, start=10.0, extent=20.0):
    return Detection(episode_id, Box((start,), (extent,)), confidence)


def brute_force_ap(detections, truths, threshold):
    """Integrate the interpolated precision over every distinct recall reached by a confidence cut."""
    by_id = {t.episode_id: t for t in truths}
    positives = sum(t.label for t in truths)
    ranked = sorted(detections, key=lambda d: (-d.confidence, d.episode_id))
    points = []
    for cut in range(1, len(ranked) + 1):
        used, hits = set(), 0
        for d in ranked[:cut]:
            truth = by_id[d.episode_id]
            if truth.label == 1 and d.episode_id not in used and iou(d.box, truth.box) >= threshold:
                used.add(d.episode_id)
                hits += 1
        points.append((hits / positives, hits / cut))
    area, previous = 0.0, 0.0
    for level in sorted({r for r, _ in points}):
        if level == 0.0:
            continue
        area += (level - previous) * max(p for r, p in points if r >= level)
        previous = level
    return area


def random_instance(rng, size):
    truths = [GroundTruth(i, int(rng.integers(2)), TRUTH) for i in range(size)]
    if not any(t.label for t in truths):
        truths[0] = GroundTruth(0, 1, TRUTH)
    detections = [
        detection(int(rng.integers(size)), float(rng.choice([0.1, 0.5, 0.9, rng.uniform()])), float(rng.integers(0, 25)))
        for _ in range(int(rng.integers(1, 9)))
    ]
    return detections, truths


class TestAveragePrecision:
    def test_single_correct_detection(self):
        assert average_precision([detection(0, 0.9)], [GroundTruth(0, 1, TRUTH)]) == 1.0

    def test_tp_fp_tp(self):
        truths = [GroundTruth(0, 1, TRUTH), GroundTruth(1, 0), GroundTruth(2, 1, TRUTH)]
        detections = [detection(0, 0.9), detection(1, 0.8), detection(2, 0.7)]
        assert average_precision(detections, truths) == pytest.approx(5 / 6)

    def test_all_false_positives(self):
        truths = [GroundTruth(0, 1, TRUTH), GroundTruth(1, 0)]
        assert average_precision([detection(0, 0.9, start=60.0), detection(1, 0.8)], truths) == 0.0

    def test_missed_positives_lower_recall(self):
        truths = [GroundTruth(0, 1, TRUTH), GroundTruth(1, 1, TRUTH)]
        assert average_precision([detection(0, 0.9)], truths) == 0.5

    def test_truth_matches_at_most_once(self):
        truths = [GroundTruth(0, 1, TRUTH)]
        flags_ap = average_precision([detection(0, 0.9), detection(0, 0.8)], truths)
        assert flags_ap == 1.0
        _, precision = pr_curve([detection(0, 0.9), detection(0, 0.8)], truths)
        assert precision == [1.0, 0.5]

    def test_ties_broken_by_episode_id(self):
        truths = [GroundTruth(0, 0), GroundTruth(1, 1, TRUTH)]
        assert average_precision([detection(0, 0.5), detection(1, 0.5)], truths) == 0.5
        truths = [GroundTruth(0, 1, TRUTH), GroundTruth(1, 0)]
        assert average_precision([detection(0, 0.5), detection(1, 0.5)], truths) == 1.0

    def test_invariant_under_monotone_transform(self):
        detections, truths = random_instance(np.random.default_rng(0), 8)
        squashed = [Detection(d.episode_id, d.box, d.confidence ** 3) for d in detections]
        assert average_precision(squashed, truths) == average_precision(detections, truths)

    def test_unknown_episode_rejected(self):
        with pytest.raises(DatasetError, match="unknown episode 5"):
            average_precision([detection(5, 0.9)], [GroundTruth(0, 1, TRUTH)])

    @pytest.mark.parametrize("seed", range(50))
    def test_matches_brute_force_oracle(self, seed):
        rng = np.random.default_rng(seed)
        for _ in range(10):
            detections, truths = random_instance(rng, int(rng.integers(1, 7)))
            for threshold in (0.0, 0.3, 0.5):
                assert average_precision(detections, truths, threshold) == pytest.approx(
                    brute_force_ap(detections, truths, threshold), abs=1e-12)


class TestPrecisionAtRecall:
    def test_perfect_ranking(self):
        truths = [GroundTruth(i, int(i < 3), TRUTH if i < 3 else None) for i in range(6)]
        candidates = [Candidate(i, TRUTH, 1.0 - i / 10) for i in range(6)]
        assert precision_at_recall(candidates, truths) == {0.5: 1.0, 0.9: 1.0, 0.99: 1.0}

    def test_reversed_ranking_with_one_positive(self):
        truths = [GroundTruth(i, int(i == 0), TRUTH if i == 0 else None) for i in range(10)]
        candidates = [Candidate(i, TRUTH, i / 10) for i in range(10)]
        assert precision_at_recall(candidates, truths)[0.5] == pytest.approx(1 / 10)

    def test_unreachable_level_is_zero(self):
        truths = [GroundTruth(0, 1, TRUTH), GroundTruth(1, 1, TRUTH)]
        result = precision_at_recall([Candidate(0, TRUTH, 0.9)], truths, levels=(0.5, 0.9))
        assert result == {0.5: 1.0, 0.9: 0.0}

    def test_boxes_are_ignored(self):
        far = Box((500.0,), (1.0,))
        assert precision_at_recall([Candidate(0, far, 0.2)], [GroundTruth(0, 1, TRUTH)], (0.99,)) == {0.99: 1.0}


class TestSweep:
    @pytest.mark.parametrize("seed", range(20))
    def test_ap_non_increasing_in_threshold(self, seed):
        rng = np.random.default_rng(100 + seed)
        for _ in range(25):
            detections, truths = random_instance(rng, int(rng.integers(1, 7)))
            sweep = ap_iou_sweep(detections, truths, (0.2, 0.3, 0.4, 0.5))
            values = [sweep[t] for t in sorted(sweep)]
            assert all(a >= b for a, b in itertools.pairwise(values))

    def test_zero_threshold_counts_every_positive_detection(self):
        truths = [GroundTruth(0, 1, TRUTH), GroundTruth(1, 1, TRUTH)]
        detections = [detection(0, 0.9, start=90.0), detection(1, 0.8, start=200.0)]
        assert ap_iou_sweep(detections, truths, (0.0, 0.5)) == {0.0: 1.0, 0.5: 0.0}
