"""Minibatch SGD on the squared pair loss."""

from __future__ import annotations

import dataclasses
import logging
from typing import TYPE_CHECKING

import numpy as np
from tqdm import tqdm

from simdet.errors import DatasetError
from simdet.simnet.network import embed_many
from simdet.simnet.similarity import attention_weights, pair_loss, pair_score, similarity_map
from simdet.tensorcore import ops
from simdet.tensorcore.optim import sgd_step
from simdet.tensorcore.tensor import Tape, Tensor

if TYPE_CHECKING:
    from collections.abc import Iterable, Sequence

    from simdet.simnet.episode import Episode
    from simdet.simnet.network import EmbedConfig
    from simdet.tensorcore.layers import Mode
    from simdet.tensorcore.optim import ParamStore, SgdConfig

logger = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True)
class LossRecord:
    epoch: int
    batch: int
    loss: float


def minibatch_loss(batch: Sequence[Episode], config: EmbedConfig, params: ParamStore, mode: Mode = "train") -> Tensor:
    """Mean squared pair loss over the minibatch."""
    if not batch:
        raise DatasetError("cannot compute the loss of an empty minibatch")
    exemplars = embed_many([episode.exemplar for episode in batch], config, params, mode)
    targets = embed_many([episode.target for episode in batch], config, params, mode)
    losses = []
    for episode, exemplar, target in zip(batch, exemplars, targets):
        smap = similarity_map(exemplar, target)
        score = pair_score(smap, attention_weights(smap, config.temperature))
        losses.append(pair_loss(score, episode.label))
    return ops.mean(ops.stack(losses))


def epoch_rng(seed: int, epoch: int) -> np.random.Generator:
    """Shuffling generator for one epoch; depends only on (seed, epoch) so a resumed run matches."""
    return np.random.default_rng(np.random.SeedSequence([seed, epoch]))


def train_epoch(
    episodes: Iterable[Episode],
    config: EmbedConfig,
    params: ParamStore,
    sgd: SgdConfig,
    epoch: int = 0,
    seed: int = 0,
    progress: bool = False,
) -> list[LossRecord]:
    """One pass over ``episodes`` in shuffled minibatches; returns the per-batch mean losses.

    The loss of each batch is recorded before its update is applied.
    """
    episodes = list(episodes)
    if not episodes:
        raise DatasetError("cannot train on an empty episode stream")
    order = epoch_rng(seed, epoch).permutation(len(episodes))
    starts = range(0, len(episodes), sgd.minibatch_size)

    trace = []
    for batch_index, start in enumerate(tqdm(starts, desc=f"epoch {epoch}", disable=not progress, leave=False)):
        batch = [episodes[i] for i in order[start:start + sgd.minibatch_size]]
        params.zero_grad()
        with Tape() as tape:
            loss = minibatch_loss(batch, config, params, "train")
        tape.backward(loss)
        sgd_step(params, sgd)
        trace.append(LossRecord(epoch, batch_index, loss.item()))

    logger.info("epoch %d: %d batches, mean loss %.6f", epoch, len(trace), float(np.mean([r.loss for r in trace])))
    return trace
