"""The attention similarity network: embedding, similarity maps, pooling, loss and training."""

from simdet.simnet.episode import Episode
from simdet.simnet.maps import ExplicitGeometry, SimilarityMap, StridedGeometry
from simdet.simnet.network import (
    EmbedConfig,
    LayerSpec,
    embed,
    embed_many,
    init_params,
    min_input_extent,
    network_geometry,
    preset,
)
from simdet.simnet.scorer import SimilarityNetwork
from simdet.simnet.similarity import (
    PairScore,
    analytic_score_gradient,
    attention_weights,
    pair_loss,
    pair_score,
    similarity_map,
)
from simdet.simnet.training import LossRecord, minibatch_loss, train_epoch

__all__ = [
    "EmbedConfig",
    "Episode",
    "ExplicitGeometry",
    "LayerSpec",
    "LossRecord",
    "PairScore",
    "SimilarityMap",
    "SimilarityNetwork",
    "StridedGeometry",
    "analytic_score_gradient",
    "attention_weights",
    "embed",
    "embed_many",
    "init_params",
    "min_input_extent",
    "minibatch_loss",
    "network_geometry",
    "pair_loss",
    "pair_score",
    "preset",
    "similarity_map",
    "train_epoch",
]
