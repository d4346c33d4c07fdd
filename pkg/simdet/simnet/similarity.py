"""Convolutional cosine similarity, attention pooling and the pair loss."""

from __future__ import annotations

import dataclasses

import numpy as np

from simdet.errors import ShapeError
from simdet.simnet.maps import MapGeometry, SimilarityMap, StridedGeometry
from simdet.tensorcore import ops
from simdet.tensorcore.layers import L2_EPSILON, conv_forward, l2_normalize, softmax_temp
from simdet.tensorcore.tensor import Tensor


def similarity_map(exemplar_emb: Tensor, target_emb: Tensor, geometry: MapGeometry | None = None) -> SimilarityMap:
    """Cosine similarity of the exemplar embedding with every same-size target patch.

    Embeddings are unbatched ``(channels, *spatial)``. The exemplar is
    L2-normalised as a whole and used as a single-output kernel; each target
    patch norm comes from convolving the squared target with a ones kernel.
    Without ``geometry`` the boxes are in embedding cells.
    """
    if exemplar_emb.ndim != target_emb.ndim or exemplar_emb.ndim not in (2, 3):
        raise ShapeError(f"embeddings must both be (channels, *spatial), got {exemplar_emb.shape} and {target_emb.shape}")
    if exemplar_emb.shape[0] != target_emb.shape[0]:
        raise ShapeError(f"embedding channel mismatch: exemplar has {exemplar_emb.shape[0]}, target has {target_emb.shape[0]}")
    if any(e > t for e, t in zip(exemplar_emb.shape[1:], target_emb.shape[1:])):
        raise ShapeError(f"exemplar embedding {exemplar_emb.shape} is larger than target embedding {target_emb.shape}")

    kernel_shape = (1, *exemplar_emb.shape)
    flat = ops.reshape(exemplar_emb, (1, exemplar_emb.size))
    kernel = ops.reshape(l2_normalize(flat, axis=1), kernel_shape)
    numerator = conv_forward(target_emb, kernel)
    energy = conv_forward(ops.square(target_emb), Tensor(np.ones(kernel_shape)))
    norms = ops.sqrt(ops.clamp_min(energy, L2_EPSILON * L2_EPSILON))
    scores = ops.div(numerator, norms)
    scores = ops.reshape(scores, scores.shape[1:])

    if geometry is None:
        geometry = StridedGeometry(scores.shape, (1,) * scores.ndim, exemplar_emb.shape[1:])
    return SimilarityMap(scores, geometry)


def attention_weights(smap: SimilarityMap, temperature: float) -> Tensor:
    """w_l = softmax(s / T) over all map locations, flattened."""
    return softmax_temp(ops.reshape(smap.scores, (smap.scores.size,)), temperature)


@dataclasses.dataclass
class PairScore:
    y_hat: Tensor
    weights: Tensor
    argmax_location: int

    @property
    def confidence(self) -> float:
        return self.y_hat.item()


def pair_score(smap: SimilarityMap, weights: Tensor) -> PairScore:
    """ŷ = Σ_l w_l s_l, plus the first-index argmax of the map."""
    if weights.size != smap.scores.size:
        raise ShapeError(f"{weights.size} weights for a map of {smap.scores.size} locations")
    y_hat = ops.dot(weights, ops.reshape(smap.scores, weights.shape))
    return PairScore(y_hat, weights, smap.argmax())


def pair_loss(score: PairScore, label: int) -> Tensor:
    if label not in (0, 1):
        raise ValueError(f"label must be 0 or 1, got {label!r}")
    return ops.square(ops.sub(score.y_hat, float(label)))


def _attention(scores: np.ndarray, temperature: float) -> tuple[np.ndarray, float]:
    if not temperature > 0.0:
        raise ValueError(f"temperature must be positive, got {temperature}")
    z = scores / temperature
    e = np.exp(z - z.max())
    weights = e / e.sum()
    return weights, float(weights @ scores)


def score_gradient(scores: np.ndarray, temperature: float) -> np.ndarray:
    """∂ŷ/∂s_l = w_l (1 + (s_l − ŷ)/T); sums to one."""
    scores = np.asarray(scores, dtype=np.float64).ravel()
    weights, y_hat = _attention(scores, temperature)
    return weights * (1.0 + (scores - y_hat) / temperature)


def analytic_score_gradient(scores: np.ndarray, label: int, temperature: float) -> np.ndarray:
    """Closed form of ∂(ŷ − y)²/∂s_l = 2(ŷ − y) w_l (1 + (s_l − ŷ)/T)."""
    scores = np.asarray(scores, dtype=np.float64).ravel()
    weights, y_hat = _attention(scores, temperature)
    return 2.0 * (y_hat - label) * weights * (1.0 + (scores - y_hat) / temperature)


def score_pipeline(scores: Tensor, label: int, temperature: float) -> Tensor:
    """pair_loss ∘ pair_score ∘ attention_weights on a bare score vector."""
    smap = SimilarityMap(scores, StridedGeometry((scores.size,), (1,), (1,)))
    return pair_loss(pair_score(smap, attention_weights(smap, temperature)), label)
