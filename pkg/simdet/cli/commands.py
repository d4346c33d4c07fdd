"""The five ``simdet`` commands.

Each command takes a resolved :class:`~simdet.config.RunConfig`, writes its
artefacts under the output directory and returns an exit status.
"""

from __future__ import annotations

import csv
import dataclasses
import logging
import sys
from typing import TYPE_CHECKING

import numpy as np

from simdet.config import write_config
from simdet.errors import ConfigError, DatasetError
from simdet.evalkit.calibration import calibrate_postprocess
from simdet.evalkit.detections import (
    GroundTruth,
    PostprocessParams,
    apply_postprocess,
    score_candidates,
    write_detections,
    write_ground_truth,
)
from simdet.evalkit.metrics import ap_iou_sweep, average_precision
from simdet.evalkit.report import evaluate_candidates, write_report
from simdet.simnet.network import init_params, preset
from simdet.simnet.scorer import SimilarityNetwork
from simdet.simnet.training import train_epoch
from simdet.synthdata.corpus import load_image_dataset
from simdet.synthdata.dataset import TRAIN_PAIRS, VALIDATION_PAIRS, build_dataset, read_dataset, write_dataset
from simdet.synthdata.episodes import ImageTrack, SequenceTrack
from simdet.synthdata.glyphs import GlyphSource
from simdet.synthdata.sequences import SequenceSource
from simdet.synthdata.splits import make_split
from simdet.tensorcore.checkpoint import load_checkpoint, save_checkpoint

if TYPE_CHECKING:
    from collections.abc import Callable, Sequence
    from pathlib import Path

    from simdet.config import RunConfig
    from simdet.evalkit.detections import Candidate, EpisodeScorer
    from simdet.evalkit.report import EvalReport
    from simdet.simnet.episode import Episode
    from simdet.simnet.network import EmbedConfig
    from simdet.synthdata.dataset import Dataset, EpisodeSet
    from simdet.tensorcore.optim import ParamStore

    ScorerFactory = Callable[[str, "Dataset", "RunConfig", "Path | None"], EpisodeScorer]

logger = logging.getLogger(__name__)

BEST_CHECKPOINT = "best.simd"
LAST_CHECKPOINT = "last.simd"


@dataclasses.dataclass(frozen=True)
class RunPaths:
    """Where the artefacts of one run live."""

    out: Path
    dataset: Path

    @property
    def checkpoints(self) -> Path:
        return self.out / "checkpoints"

    @property
    def best(self) -> Path:
        return self.checkpoints / BEST_CHECKPOINT

    @property
    def last(self) -> Path:
        return self.checkpoints / LAST_CHECKPOINT

    @property
    def loss_csv(self) -> Path:
        return self.out / "loss.csv"

    @property
    def validation_csv(self) -> Path:
        return self.out / "validation.csv"

    @property
    def retrain_loss_csv(self) -> Path:
        return self.out / "loss-retrain.csv"

    def report(self, model: str) -> Path:
        return self.out / f"report-{model}.json"

    def detections(self, model: str, n_way: int) -> Path:
        return self.out / f"detections-{model}-{n_way}way.csv"

    def ground_truth(self, n_way: int) -> Path:
        return self.out / f"ground-truth-{n_way}way.csv"

    def sweep(self, model: str, n_way: int) -> Path:
        return self.out / f"sweep-{model}-{n_way}way.csv"


################
#  synth       #
################


def make_track(config: RunConfig):
    """The episode track of ``config`` and, for images, the source of exemplar-classifier negatives."""
    if config.track == "image":
        if config.corpus_dir is not None:
            source = load_image_dataset(config.corpus_dir, invert=config.corpus_invert)
        else:
            source = GlyphSource(config.seed, config.class_count, config.instances_per_class)
        return ImageTrack(source, config.grid_size), source

    source = SequenceSource(config.seed, config.class_count, config.sequence_channels, tuple(config.template_frames))
    return SequenceTrack(source, config.sequence_frames, config.distractors, config.insert_noise), None


def cmd_synth(config: RunConfig, paths: RunPaths) -> int:
    track, negatives_source = make_track(config)
    split = make_split(track.source.class_ids, config.split_counts, config.seed)
    dataset = build_dataset(
        track, split, config.seed, config.train_pairs, config.eval_targets, config.n_ways,
        config.grid_size if config.track == "image" else None, negatives_source, config.negatives_per_class,
    )
    manifest = write_dataset(paths.dataset, dataset)
    write_config(paths.out, config)
    print(f"wrote {len(dataset.sets)} episode sets to {manifest.parent}")
    return 0


################
#  train       #
################


def load_dataset(config: RunConfig, paths: RunPaths) -> Dataset:
    dataset = read_dataset(paths.dataset)
    if dataset.track != config.track:
        raise ConfigError(f"dataset is for the {dataset.track} track, the run is configured for {config.track}", paths.dataset)
    return dataset


def network_config(config: RunConfig, dataset: Dataset) -> EmbedConfig:
    sample = dataset.episode_set(TRAIN_PAIRS).episodes[0]
    return preset(config.model_preset, dataset.spatial_rank, sample.exemplar.shape[0], config.temperature)


def validation_ap(episodes: Sequence[Episode], network: SimilarityNetwork, iou_threshold: float, workers: int) -> float:
    """AP of every candidate (no threshold, no shifts) on the validation N-way set."""
    candidates = score_candidates(episodes, network, workers)
    extents = {e.episode_id: e.target_extent for e in episodes}
    detections = apply_postprocess(candidates, PostprocessParams(), extents)
    return average_precision(detections, [GroundTruth.from_episode(e) for e in episodes], iou_threshold)


def _append_rows(path: Path, header: Sequence[str], rows: Sequence[Sequence], fresh: bool) -> None:
    with path.open("w" if fresh else "a", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        if fresh:
            writer.writerow(header)
        writer.writerows(rows)


def _run_epochs(
    episodes: Sequence[Episode],
    config: RunConfig,
    embed_config: EmbedConfig,
    params: ParamStore,
    paths: RunPaths,
    epochs: range,
    select_on: EpisodeSet,
    workers: int,
    progress: bool,
    best_ap: float = -1.0,
) -> tuple[int, float]:
    best_epoch = -1
    for epoch in epochs:
        trace = train_epoch(episodes, embed_config, params, config.sgd, epoch, config.seed, progress)
        _append_rows(paths.loss_csv, ("epoch", "batch", "loss"), [(r.epoch, r.batch, repr(r.loss)) for r in trace], fresh=False)
        ap = validation_ap(select_on.episodes, SimilarityNetwork(embed_config, params), config.iou_threshold, workers)
        _append_rows(paths.validation_csv, ("epoch", "ap"), [(epoch, repr(ap))], fresh=False)
        logger.info("epoch %d: validation AP %.4f", epoch, ap)
        meta = {"epoch": epoch, "validation_ap": ap}
        if ap > best_ap:
            best_ap, best_epoch = ap, epoch
            save_checkpoint(paths.best, params, meta)
        save_checkpoint(paths.last, params, {**meta, "best_ap": best_ap})
    return best_epoch, best_ap


def cmd_train(config: RunConfig, paths: RunPaths, resume: bool = False, workers: int = 1, progress: bool = False) -> int:
    """Train, evaluating validation AP after every epoch and keeping the best checkpoint."""
    dataset = load_dataset(config, paths)
    embed_config = network_config(config, dataset)
    params = init_params(embed_config, config.seed)
    if not dataset.n_ways:
        raise DatasetError("dataset has no N-way validation set to select epochs on", paths.dataset)
    select_on = dataset.nway("validation", dataset.n_ways[0])
    paths.checkpoints.mkdir(parents=True, exist_ok=True)
    write_config(paths.out, config)

    start, best_ap = 0, -1.0
    if resume:
        meta = load_checkpoint(paths.last, params)
        start, best_ap = int(meta["epoch"]) + 1, meta.get("best_ap", -1.0)
        logger.info("resuming at epoch %d (best validation AP so far %.4f)", start, best_ap)
    else:
        _append_rows(paths.loss_csv, ("epoch", "batch", "loss"), [], fresh=True)
        _append_rows(paths.validation_csv, ("epoch", "ap"), [], fresh=True)

    train_pairs = dataset.episode_set(TRAIN_PAIRS).episodes
    best_epoch, best_ap = _run_epochs(
        train_pairs, config, embed_config, params, paths, range(start, config.epochs), select_on, workers, progress, best_ap,
    )
    if best_epoch < 0 and not paths.best.exists():
        raise DatasetError("no epoch was trained; nothing to select")

    if config.retrain_with_validation:
        selected = int(load_checkpoint(paths.best, init_params(embed_config, config.seed))["epoch"])
        logger.info("retraining on training and validation pairs for %d epochs", selected + 1)
        params = init_params(embed_config, config.seed)
        joint = (*train_pairs, *dataset.episode_set(VALIDATION_PAIRS).episodes)
        _append_rows(paths.retrain_loss_csv, ("epoch", "batch", "loss"), [], fresh=True)
        for epoch in range(selected + 1):
            trace = train_epoch(joint, embed_config, params, config.sgd, epoch, config.seed, progress)
            _append_rows(paths.retrain_loss_csv, ("epoch", "batch", "loss"), [(r.epoch, r.batch, repr(r.loss)) for r in trace], fresh=False)
        save_checkpoint(paths.best, params, {"epoch": selected, "retrained": 1})

    print(f"best checkpoint: {paths.best} (validation AP {best_ap:.4f})")
    return 0


################
#  eval/sweep  #
################


def default_scorer(model: str, dataset: Dataset, config: RunConfig, checkpoint: Path | None) -> EpisodeScorer:
    """The scorer for ``model``; baselines only run on the track they were designed for."""
    if model == "dtw":
        if dataset.track != "sequence":
            raise ConfigError("the dtw baseline only applies to the sequence track")
        from simdet.baselines.dtw import DtwConfig, DtwScorer

        return DtwScorer(DtwConfig(sigma=config.dtw_sigma))
    if model == "chance":
        from simdet.baselines.chance import ChanceScorer

        return ChanceScorer(config.seed)
    if model == "exemplar":
        if dataset.track != "image":
            raise ConfigError("the exemplar baseline only applies to the image track")
        if not dataset.negatives:
            raise DatasetError("dataset has no negative instances for the exemplar classifier")
        from simdet.baselines.exemplar import ExemplarScorer

        return ExemplarScorer.from_images(np.concatenate([dataset.negatives[c] for c in sorted(dataset.negatives)]))
    if model != "simnet":
        raise ConfigError(f"unknown model {model!r}")

    embed_config = network_config(config, dataset)
    params = init_params(embed_config, config.seed)
    load_checkpoint(checkpoint, params)
    return SimilarityNetwork(embed_config, params)


def _calibrated(
    dataset: Dataset, n_way: int, scorer: EpisodeScorer, config: RunConfig, workers: int
) -> tuple[PostprocessParams, EpisodeSet, list[Candidate]]:
    validation = dataset.nway("validation", n_way)
    params = calibrate_postprocess(validation.episodes, scorer, config.iou_threshold, workers)
    test = dataset.nway("test", n_way)
    return params, test, score_candidates(test.episodes, scorer, workers)


def cmd_eval(
    config: RunConfig,
    paths: RunPaths,
    model: str = "simnet",
    checkpoint: Path | None = None,
    workers: int = 1,
    scorer_factory: ScorerFactory = default_scorer,
) -> int:
    dataset = load_dataset(config, paths)
    scorer = scorer_factory(model, dataset, config, checkpoint or paths.best)
    reports: list[EvalReport] = []
    for n_way in dataset.n_ways:
        params, test, candidates = _calibrated(dataset, n_way, scorer, config, workers)
        extents = {e.episode_id: e.target_extent for e in test.episodes}
        report, detections = evaluate_candidates(
            n_way, candidates, test.truths, extents, params, config.iou_threshold, config.recall_levels,
        )
        reports.append(report)
        write_detections(paths.detections(model, n_way), detections, dataset.spatial_rank)
        write_ground_truth(paths.ground_truth(n_way), test.truths, dataset.spatial_rank)

    write_report(paths.report(model), model, dataset.track, reports)
    write_config(paths.out, config)
    for report in reports:
        metrics = "  ".join(f"{name} {value:.4f}" for name, value in report.metrics().items())
        print(f"{model} {report.set_name}: {metrics}")
    return 0


def cmd_sweep(
    config: RunConfig,
    paths: RunPaths,
    model: str = "simnet",
    checkpoint: Path | None = None,
    workers: int = 1,
    scorer_factory: ScorerFactory = default_scorer,
) -> int:
    dataset = load_dataset(config, paths)
    scorer = scorer_factory(model, dataset, config, checkpoint or paths.best)
    for n_way in dataset.n_ways:
        params, test, candidates = _calibrated(dataset, n_way, scorer, config, workers)
        extents = {e.episode_id: e.target_extent for e in test.episodes}
        detections = apply_postprocess(candidates, params, extents)
        sweep = ap_iou_sweep(detections, test.truths, config.sweep_thresholds)
        rows = [(repr(threshold), repr(ap)) for threshold, ap in sorted(sweep.items())]
        _append_rows(paths.sweep(model, n_way), ("iou_threshold", "ap"), rows, fresh=True)
        print(f"{model} {n_way}-way: " + "  ".join(f"AP@{t:g} {ap:.4f}" for t, ap in sorted(sweep.items())))
    return 0


################
#  gradcheck   #
################


def cmd_gradcheck(config: RunConfig, oracle=None) -> int:
    """Print every check with its error and tolerance; exit status 1 if any fails."""
    from simdet.simnet.checks import run_suite
    from simdet.simnet.similarity import analytic_score_gradient

    results = run_suite(config.seed, oracle=oracle or analytic_score_gradient)
    width = max(len(r.name) for r in results)
    for r in results:
        verdict = "ok" if r.passed else "FAILED"
        print(f"{r.name:<{width}}  max error {r.error:.3e}  tolerance {r.tolerance:.0e}  [{r.instances}]  {verdict}")
    if failed := [r for r in results if not r.passed]:
        s = "s" * (len(failed) != 1)
        print(f"gradcheck failed: {len(failed)} check{s}", file=sys.stderr)
        return 1
    return 0
