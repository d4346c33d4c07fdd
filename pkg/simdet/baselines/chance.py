"""A detector that guesses: random confidence, exemplar-sized box at a random offset."""

from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np

from simdet.evalkit.boxes import Box
from simdet.evalkit.detections import Candidate

if TYPE_CHECKING:
    from collections.abc import Sequence

    from simdet.simnet.episode import Episode


class ChanceScorer:
    """Lower bound for every other scorer.

    Each episode gets its own generator seeded from ``(seed, episode_id)``, so
    the guesses do not depend on scoring order or thread count.
    """

    def __init__(self, seed: int = 0):
        self.seed = seed

    def guess(self, episode: Episode) -> Candidate:
        rng = np.random.default_rng(np.random.SeedSequence([self.seed, episode.episode_id]))
        window = episode.exemplar.shape[1:]
        offsets = tuple(float(rng.integers(t - w + 1)) for t, w in zip(episode.target_extent, window))
        return Candidate(episode.episode_id, Box(offsets, tuple(float(w) for w in window)), float(rng.uniform()))

    def score_target(self, episodes: Sequence[Episode]) -> list[Candidate]:
        return [self.guess(episode) for episode in episodes]
