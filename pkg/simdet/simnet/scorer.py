"""Frozen-parameter scoring of evaluation episodes with the similarity network."""

from __future__ import annotations

from typing import TYPE_CHECKING

from simdet.evalkit.detections import Candidate, candidate_from_map
from simdet.simnet.maps import StridedGeometry
from simdet.simnet.network import embed, network_geometry
from simdet.simnet.similarity import attention_weights, pair_score, similarity_map
from simdet.tensorcore.tensor import Tensor

if TYPE_CHECKING:
    from collections.abc import Sequence

    import numpy as np

    from simdet.simnet.episode import Episode
    from simdet.simnet.maps import SimilarityMap
    from simdet.simnet.network import EmbedConfig
    from simdet.tensorcore.optim import ParamStore


class SimilarityNetwork:
    """Scores episodes in inference mode; boxes are in input units.

    Parameters must not change while a scorer is in use; nothing is recorded
    on a tape, so targets can be scored from several threads.
    """

    def __init__(self, config: EmbedConfig, params: ParamStore):
        self.config = config
        self.params = params

    def embed(self, array: np.ndarray) -> Tensor:
        return embed(Tensor(array), self.config, self.params, "infer")

    def similarity(self, exemplar: np.ndarray, exemplar_emb: Tensor, target_emb: Tensor) -> SimilarityMap:
        stride, extent = network_geometry(self.config, exemplar.shape)
        map_shape = tuple(t - e + 1 for t, e in zip(target_emb.shape[1:], exemplar_emb.shape[1:]))
        return similarity_map(exemplar_emb, target_emb, StridedGeometry(map_shape, stride, extent))

    def score_target(self, episodes: Sequence[Episode]) -> list[Candidate]:
        # f_θ(B) once per target, compared against every exemplar paired with it
        target_emb = self.embed(episodes[0].target)
        candidates = []
        for episode in episodes:
            smap = self.similarity(episode.exemplar, self.embed(episode.exemplar), target_emb)
            score = pair_score(smap, attention_weights(smap, self.config.temperature))
            candidates.append(candidate_from_map(episode, smap, score.confidence))
        return candidates

    def score_episode(self, episode: Episode) -> Candidate:
        return self.score_target([episode])[0]
