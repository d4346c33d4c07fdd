"""The gradient-check suite run by ``simdet gradcheck``.

Three views of the same derivative are compared on random score vectors:
the tape's reverse sweep, the closed-form gradient of the attention-pooled
squared loss, and central finite differences. A final check pushes finite
differences through a small embedding network end to end.
"""

from __future__ import annotations

import dataclasses
from typing import TYPE_CHECKING

import numpy as np

from simdet.simnet.episode import Episode
from simdet.simnet.maps import SimilarityMap, StridedGeometry
from simdet.simnet.network import EmbedConfig, LayerSpec, init_params
from simdet.simnet.similarity import analytic_score_gradient, attention_weights, pair_score, score_pipeline
from simdet.simnet.training import minibatch_loss
from simdet.tensorcore.gradcheck import finite_diff_gradcheck, param_gradcheck, relative_error, sample_coordinates
from simdet.tensorcore.tensor import Tape, Tensor

if TYPE_CHECKING:
    from collections.abc import Callable

    GradientOracle = Callable[[np.ndarray, int, float], np.ndarray]

TEMPERATURES = (1.0 / 3.0, 1.0, 3.0)
ORACLE_TOLERANCE = 1e-9
FINITE_DIFF_TOLERANCE = 1e-4
FINITE_DIFF_STEP = 1e-5


@dataclasses.dataclass(frozen=True)
class CheckResult:
    name: str
    error: float
    tolerance: float
    instances: int

    @property
    def passed(self) -> bool:
        return self.error <= self.tolerance


@dataclasses.dataclass(frozen=True)
class ScoreInstance:
    scores: np.ndarray
    label: int
    temperature: float


def random_instances(count: int, seed: int) -> list[ScoreInstance]:
    """Score vectors of length 5 to 50 in [0, 1], cycling through labels and temperatures."""
    rng = np.random.default_rng(seed)
    instances = []
    for i in range(count):
        length = int(rng.integers(5, 51))
        instances.append(ScoreInstance(rng.uniform(0.0, 1.0, size=length), i % 2, TEMPERATURES[i % len(TEMPERATURES)]))
    return instances


def _autograd(instance: ScoreInstance) -> np.ndarray:
    scores = Tensor(instance.scores.copy(), requires_grad=True)
    with Tape() as tape:
        loss = score_pipeline(scores, instance.label, instance.temperature)
    tape.backward(loss)
    return scores.grad


def _score_autograd(instance: ScoreInstance) -> np.ndarray:
    """Tape gradient of ŷ itself."""
    scores = Tensor(instance.scores.copy(), requires_grad=True)
    with Tape() as tape:
        smap = SimilarityMap(scores, StridedGeometry((scores.size,), (1,), (1,)))
        y_hat = pair_score(smap, attention_weights(smap, instance.temperature)).y_hat
    tape.backward(y_hat)
    return scores.grad


def check_oracle(instances: list[ScoreInstance], oracle: GradientOracle) -> CheckResult:
    error = max(
        relative_error(_autograd(inst), oracle(inst.scores, inst.label, inst.temperature)) for inst in instances
    )
    return CheckResult("autograd vs closed form", error, ORACLE_TOLERANCE, len(instances))


def check_finite_differences(instances: list[ScoreInstance]) -> CheckResult:
    error = max(
        finite_diff_gradcheck(lambda s, inst=inst: score_pipeline(s, inst.label, inst.temperature), Tensor(inst.scores), FINITE_DIFF_STEP)
        for inst in instances
    )
    return CheckResult("autograd vs finite differences", error, FINITE_DIFF_TOLERANCE, len(instances))


def check_gradient_sum(instances: list[ScoreInstance]) -> CheckResult:
    error = max(abs(float(np.sum(_score_autograd(inst))) - 1.0) for inst in instances)
    return CheckResult("sum of dŷ/ds equals one", error, ORACLE_TOLERANCE, len(instances))


def self_reinforcement_violations(gradient: np.ndarray, scores: np.ndarray, temperature: float) -> int:
    """Pairs l, m with s_l > s_m ≥ ŷ − T where the higher score does not get the larger push."""
    weights = np.exp((scores - scores.max()) / temperature)
    y_hat = float((weights / weights.sum()) @ scores)
    eligible = np.flatnonzero(scores >= y_hat - temperature)
    push = -gradient[eligible]
    s = scores[eligible]
    higher = s[:, None] > s[None, :]
    return int(np.count_nonzero(higher & ~(push[:, None] > push[None, :])))


def check_self_reinforcement(instances: list[ScoreInstance]) -> CheckResult:
    positives = [inst for inst in instances if inst.label == 1]
    violations = sum(self_reinforcement_violations(_autograd(inst), inst.scores, inst.temperature) for inst in positives)
    return CheckResult("higher scores get larger pushes (positives)", float(violations), 0.0, len(positives))


def _tiny_network_batch(rng: np.random.Generator) -> list[Episode]:
    episodes = []
    for i in range(4):
        exemplar = rng.normal(size=(1, 8, 8))
        target = rng.normal(size=(1, 12, 12))
        episodes.append(Episode(i, exemplar, target, i % 2, f"class-{i}", i))
    return episodes


def check_network(seed: int, coordinates: int = 24) -> CheckResult:
    """Finite differences of the minibatch loss w.r.t. sampled network parameters."""
    rng = np.random.default_rng(seed)
    config = EmbedConfig(2, 1, (LayerSpec(8, kernel=3), LayerSpec(8, kernel=3)))
    params = init_params(config, seed)
    batch = _tiny_network_batch(rng)
    picked = sample_coordinates(params, coordinates, rng)
    error = param_gradcheck(lambda: minibatch_loss(batch, config, params, "train"), params, picked, FINITE_DIFF_STEP)
    return CheckResult("network parameters vs finite differences", error, FINITE_DIFF_TOLERANCE, len(picked))


def run_suite(seed: int = 0, instances: int = 100, oracle: GradientOracle = analytic_score_gradient) -> list[CheckResult]:
    drawn = random_instances(instances, seed)
    return [
        check_oracle(drawn, oracle),
        check_finite_differences(drawn),
        check_gradient_sum(drawn),
        check_self_reinforcement(drawn),
        check_network(seed),
    ]
