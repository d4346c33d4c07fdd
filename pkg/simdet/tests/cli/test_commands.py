import csv
import dataclasses
import json

import numpy as np
import pytest

from simdet.cli import commands, main
from simdet.cli.parser import create_parser
from simdet.config import CONFIG_FILE_NAME, RunConfig, read_config
from simdet.errors import ConfigError
from simdet.evalkit.boxes import Box
from simdet.evalkit.detections import Candidate
from simdet.simnet.similarity import analytic_score_gradient
from simdet.synthdata.dataset import MANIFEST, Dataset

TINY = """\
# a sequence run small enough for the test suite
Track: sequence
Seed: 5
Train-Classes: 4
Validation-Classes: 4
Test-Classes: 4
Train-Pairs: 8
Eval-Targets: 2
N-Way: 3
Epochs: 1
Minibatch-Size: 4
Sequence-Channels: 8
Workers: 1
"""


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "tiny.txt"
    path.write_text(TINY + f"Output-Dir: {tmp_path / 'run'}\n", encoding="utf-8")
    return path


@pytest.fixture
def config(config_file):
    return read_config(config_file)


@pytest.fixture
def paths(config):
    return commands.RunPaths(config.output_dir, config.dataset_dir)


@pytest.fixture
def synthesised(config, paths):
    assert commands.cmd_synth(config, paths) == 0
    return paths


class ExactScorer:
    """Scores the true box with confidence 1 and a stray box with 0."""

    def score_target(self, episodes):
        return [Candidate(e.episode_id, e.truth_box or Box((0.0,), (4.0,)), float(e.label)) for e in episodes]


def exact_factory(model, dataset, config, checkpoint):
    return ExactScorer()


def read_rows(path):
    with path.open(encoding="utf-8", newline="") as f:
        return list(csv.reader(f))


class TestParser:
    def test_out_maps_to_output_dir(self, tmp_path):
        args = create_parser().parse_args(["synth", "--out", str(tmp_path), "--seed", "3"])
        assert (args.command, args.output_dir, args.seed) == ("synth", tmp_path, 3)

    def test_model_defaults_to_simnet(self):
        args = create_parser().parse_args(["eval"])
        assert (args.model, args.checkpoint) == ("simnet", None)

    def test_train_flags(self):
        args = create_parser().parse_args(["train", "--epochs", "3", "--resume"])
        assert (args.epochs, args.resume, args.retrain_with_validation) == (3, True, None)

    @pytest.mark.parametrize("argv", [
        ["synth", "--seed", "-1"],
        ["synth", "--seed", str(2 ** 64)],
        ["train", "--epochs", "0"],
        ["eval", "--model", "svm"],
        [],
    ])
    def test_rejected(self, argv, capsys):
        with pytest.raises(SystemExit) as info:
            create_parser().parse_args(argv)
        assert info.value.code == 2


def test_flags_override_config_file(config_file, tmp_path):
    from simdet.cli import resolve_config

    args = create_parser().parse_args(["train", "--config", str(config_file), "--seed", "9", "--epochs", "3",
                                       "--out", str(tmp_path / "other")])
    config = resolve_config(args)
    assert (config.seed, config.epochs, config.track) == (9, 3, "sequence")
    assert config.output_dir == tmp_path / "other"
    assert config.train_pairs == 8


class TestSynth:
    def test_writes_dataset_and_config(self, capsys, config, synthesised):
        assert (synthesised.dataset / MANIFEST).is_file()
        assert read_config(synthesised.out / CONFIG_FILE_NAME) == config
        assert "wrote 4 episode sets" in capsys.readouterr().out

    def test_same_seed_same_manifest(self, config, tmp_path):
        manifests = []
        for name in ("a", "b"):
            paths = commands.RunPaths(tmp_path / name, tmp_path / name / "dataset")
            commands.cmd_synth(config, paths)
            manifests.append((paths.dataset / MANIFEST).read_bytes())
        assert manifests[0] == manifests[1]

    def test_n_beyond_split_is_a_clean_error(self, config_file, capsys):
        config_file.write_text(config_file.read_text(encoding="utf-8").replace("N-Way: 3", "N-Way: 9"), encoding="utf-8")
        assert main(["synth", "--config", str(config_file)]) == 1
        err = capsys.readouterr().err
        assert err.startswith("simdet: error: ")
        assert "9-way evaluation on the sequence track needs 10 classes, split has 4" in err


def test_bad_config_file_lists_every_problem(tmp_path, capsys):
    path = tmp_path / "bad.txt"
    path.write_text("Seed: x\nColour: red\n", encoding="utf-8")
    assert main(["synth", "--config", str(path)]) == 1
    err = capsys.readouterr().err.splitlines()
    assert err[0] == f"simdet: error: ({path}): invalid configuration file"
    assert err[1] == f"  {path}:2:  Unknown key: Colour"


def test_missing_dataset_is_a_clean_error(tmp_path, capsys):
    assert main(["eval", "--out", str(tmp_path / "empty")]) == 1
    assert capsys.readouterr().err.startswith("simdet: error: ")


class TestTrain:
    def test_one_epoch(self, config, synthesised, capsys):
        assert commands.cmd_train(config, synthesised) == 0
        assert synthesised.best.is_file()
        assert synthesised.last.is_file()
        loss = read_rows(synthesised.loss_csv)
        assert loss[0] == ["epoch", "batch", "loss"]
        # 8 pairs in minibatches of 4
        assert [row[:2] for row in loss[1:]] == [["0", "0"], ["0", "1"]]
        validation = read_rows(synthesised.validation_csv)
        assert validation[0] == ["epoch", "ap"]
        assert validation[1][0] == "0"
        assert 0.0 <= float(validation[1][1]) <= 1.0
        assert "best checkpoint:" in capsys.readouterr().out

    def test_resume_matches_an_uninterrupted_run(self, config, tmp_path):
        two = commands.RunPaths(tmp_path / "two", tmp_path / "data")
        commands.cmd_synth(config, two)
        commands.cmd_train(dataclasses.replace(config, epochs=2), two)

        resumed = commands.RunPaths(tmp_path / "resumed", tmp_path / "data")
        commands.cmd_train(config, resumed)
        commands.cmd_train(dataclasses.replace(config, epochs=2), resumed, resume=True)

        assert resumed.loss_csv.read_bytes() == two.loss_csv.read_bytes()
        assert resumed.validation_csv.read_bytes() == two.validation_csv.read_bytes()
        assert resumed.last.read_bytes() == two.last.read_bytes()

    def test_track_mismatch(self, config, synthesised):
        image = RunConfig(track="image", output_dir=config.output_dir)
        with pytest.raises(ConfigError, match="dataset is for the sequence track"):
            commands.cmd_train(image, synthesised)


class TestEval:
    def test_exact_scorer_reaches_full_ap(self, config, synthesised, capsys):
        assert commands.cmd_eval(config, synthesised, scorer_factory=exact_factory) == 0
        report = json.loads(synthesised.report("simnet").read_text(encoding="utf-8"))
        assert report["track"] == "sequence"
        assert report["sets"]["3-way"] == {"AP": 1.0, "Pr@0.5": 1.0, "Pr@0.9": 1.0, "Pr@0.99": 1.0}
        assert report["calibration"]["3-way"] == {"threshold": 0.05, "start_shift": 0, "end_shift": 0}

        detections = read_rows(synthesised.detections("simnet", 3))
        truth = read_rows(synthesised.ground_truth(3))
        assert len(truth) == 1 + 6
        # only the two positives clear the calibrated threshold
        assert len(detections) == 1 + 2
        assert "simnet 3-way: AP 1.0000" in capsys.readouterr().out

    def test_trained_network_end_to_end(self, config, synthesised):
        commands.cmd_train(config, synthesised)
        assert commands.cmd_eval(config, synthesised) == 0
        report = json.loads(synthesised.report("simnet").read_text(encoding="utf-8"))
        assert 0.0 <= report["sets"]["3-way"]["AP"] <= 1.0

    def test_dtw_baseline(self, config, synthesised):
        assert commands.cmd_eval(config, synthesised, model="dtw") == 0
        assert synthesised.report("dtw").is_file()

    def test_baselines_keep_to_their_track(self, config):
        images = Dataset("image", 0, None, {})
        with pytest.raises(ConfigError, match="dtw baseline only applies to the sequence track"):
            commands.default_scorer("dtw", images, config, None)
        sequences = Dataset("sequence", 0, None, {})
        with pytest.raises(ConfigError, match="exemplar baseline only applies to the image track"):
            commands.default_scorer("exemplar", sequences, config, None)

    def test_exemplar_baseline_uses_every_negative_instance(self, config):
        negatives = {"a": np.zeros((3, 32, 32)), "b": np.ones((2, 32, 32))}
        scorer = commands.default_scorer("exemplar", Dataset("image", 0, None, {}, negatives=negatives), config, None)
        assert scorer.negatives.shape == (5, 1764)

    def test_sweep_is_non_increasing(self, config, synthesised):
        assert commands.cmd_sweep(config, synthesised, scorer_factory=exact_factory) == 0
        rows = read_rows(synthesised.sweep("simnet", 3))
        assert rows[0] == ["iou_threshold", "ap"]
        thresholds = [float(t) for t, _ in rows[1:]]
        aps = [float(ap) for _, ap in rows[1:]]
        assert thresholds == list(config.sweep_thresholds)
        assert aps == sorted(aps, reverse=True)


class TestGradcheck:
    def test_passes(self, capsys):
        assert commands.cmd_gradcheck(RunConfig()) == 0
        out = capsys.readouterr().out
        assert "FAILED" not in out
        assert out.count(" ok") == 5

    def test_sign_error_fails(self, capsys):
        def flipped(scores, label, temperature):
            return -analytic_score_gradient(scores, label, temperature)

        assert commands.cmd_gradcheck(RunConfig(), oracle=flipped) == 1
        captured = capsys.readouterr()
        assert "FAILED" in captured.out
        assert "gradcheck failed: 1 check" in captured.err
