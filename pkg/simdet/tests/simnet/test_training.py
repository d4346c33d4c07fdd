import numpy as np
import pytest

from simdet.errors import DatasetError
from simdet.simnet.episode import Episode
from simdet.simnet.network import EmbedConfig, LayerSpec, init_params
from simdet.simnet.training import epoch_rng, minibatch_loss, train_epoch
from simdet.tensorcore.optim import SgdConfig

CONFIG = EmbedConfig(1, 1, (LayerSpec(4, kernel=3), LayerSpec(4, kernel=3)))


def repeated_episodes(count=64):
    rng = np.random.default_rng(21)
    exemplar, target = rng.uniform(size=(1, 8)), rng.uniform(size=(1, 20))
    return [Episode(i, exemplar, target, 1, "class-0", i) for i in range(count)]


def trainable(params):
    return {name: tensor.data.copy() for name, tensor in params.items()}


def test_loss_decreases_over_an_epoch():
    params = init_params(CONFIG, seed=0)
    trace = train_epoch(repeated_episodes(), CONFIG, params, SgdConfig(0.05, 8), epoch=0, seed=0)
    assert len(trace) == 8
    assert [r.batch for r in trace] == list(range(8))
    assert trace[-1].loss < trace[0].loss


def test_zero_learning_rate_keeps_parameters():
    params = init_params(CONFIG, seed=0)
    before = trainable(params)
    train_epoch(repeated_episodes(16), CONFIG, params, SgdConfig(0.0, 4))
    for name, value in trainable(params).items():
        assert value.tobytes() == before[name].tobytes()


def test_fixed_seed_gives_identical_traces():
    traces = []
    for _ in range(2):
        params = init_params(CONFIG, seed=1)
        traces.append([r.loss for r in train_epoch(repeated_episodes(24), CONFIG, params, SgdConfig(0.1, 5), epoch=2, seed=9)])
    assert traces[0] == traces[1]


def test_epoch_order_depends_only_on_seed_and_epoch():
    assert list(epoch_rng(4, 1).permutation(10)) == list(epoch_rng(4, 1).permutation(10))
    assert list(epoch_rng(4, 1).permutation(50)) != list(epoch_rng(4, 2).permutation(50))


def test_minibatch_loss_is_mean_of_pair_losses():
    params = init_params(CONFIG, seed=0)
    batch = repeated_episodes(2)
    flipped = [Episode(1, batch[1].exemplar, batch[1].target, 0, "class-0", 1)]
    positive = minibatch_loss(batch[:1], CONFIG, params, "infer").item()
    negative = minibatch_loss(flipped, CONFIG, params, "infer").item()
    both = minibatch_loss([batch[0], flipped[0]], CONFIG, params, "infer").item()
    assert both == pytest.approx((positive + negative) / 2, rel=1e-12)


def test_empty_stream_rejected():
    with pytest.raises(DatasetError, match="empty"):
        train_epoch([], CONFIG, init_params(CONFIG, seed=0), SgdConfig())
