"""Whole runs through ``main``; enable with ``--run-slow``."""

import json
import time

import pytest

from simdet.cli import main

TRAINING_BUDGET_SECONDS = 600.0

IMAGE_RUN = """\
Track: image
Seed: 21
Train-Classes: 10
Validation-Classes: 8
Test-Classes: 8
Instances-Per-Class: 4
Train-Pairs: 64
Eval-Targets: 4
N-Way: 5
Epochs: 2
Minibatch-Size: 16
"""

SEQUENCE_RUN = """\
Track: sequence
Seed: 22
Train-Classes: 8
Validation-Classes: 6
Test-Classes: 6
Train-Pairs: 32
Eval-Targets: 4
N-Way: 4
Epochs: 2
Minibatch-Size: 8
"""


# full desk protocol: 60/20/20 classes, 2×2 grids, 1024 pairs, 4 epochs
DESK_IMAGE_RUN = """\
Track: image
Seed: 0
N-Way: 5
"""

DESK_SEQUENCE_RUN = """\
Track: sequence
Seed: 0
N-Way: 10
DTW-Sigma: 50
Insert-Noise: 0.1
"""


def run_all(tmp_path, name, text, models, sweep=True):
    out = tmp_path / name
    config = tmp_path / f"{name}.txt"
    config.write_text(text + f"Output-Dir: {out}\n", encoding="utf-8")
    common = ["--config", str(config), "--single-thread"]
    assert main(["synth", *common]) == 0
    started = time.monotonic()
    assert main(["train", *common]) == 0
    training_seconds = time.monotonic() - started
    for model in models:
        assert main(["eval", *common, "--model", model]) == 0
        if sweep:
            assert main(["sweep", *common, "--model", model]) == 0
    return out, training_seconds


def report_ap(out, model, set_name):
    report = json.loads((out / f"report-{model}.json").read_text(encoding="utf-8"))
    return report["sets"][set_name]["AP"]


@pytest.mark.slow
@pytest.mark.parametrize(("text", "models", "set_name"), [
    (IMAGE_RUN, ("simnet", "exemplar"), "5-way"),
    (SEQUENCE_RUN, ("simnet", "dtw"), "4-way"),
])
def test_full_run(tmp_path, text, models, set_name):
    out, _ = run_all(tmp_path, "run", text, models)
    assert (out / "checkpoints" / "best.simd").is_file()
    for model in models:
        report = json.loads((out / f"report-{model}.json").read_text(encoding="utf-8"))
        metrics = report["sets"][set_name]
        assert set(metrics) == {"AP", "Pr@0.5", "Pr@0.9", "Pr@0.99"}
        assert all(0.0 <= value <= 1.0 for value in metrics.values())
        assert (out / f"sweep-{model}-{set_name.replace('-', '')}.csv").is_file()


@pytest.mark.slow
def test_single_thread_runs_are_byte_identical(tmp_path):
    first, _ = run_all(tmp_path, "first", SEQUENCE_RUN, ("simnet",))
    second, _ = run_all(tmp_path, "second", SEQUENCE_RUN, ("simnet",))
    for name in ("loss.csv", "validation.csv", "report-simnet.json", "detections-simnet-4way.csv",
                 "checkpoints/best.simd", "dataset/manifest.json"):
        assert (first / name).read_bytes() == (second / name).read_bytes(), name


@pytest.mark.slow
def test_image_network_beats_chance_and_the_exemplar_baseline(tmp_path):
    out, training_seconds = run_all(tmp_path, "desk", DESK_IMAGE_RUN, ("simnet", "exemplar", "chance"), sweep=False)
    assert training_seconds <= TRAINING_BUDGET_SECONDS
    simnet, exemplar, chance = (report_ap(out, model, "5-way") for model in ("simnet", "exemplar", "chance"))
    assert simnet >= 3 * chance
    assert simnet > exemplar


@pytest.mark.slow
def test_sequence_network_beats_dtw_and_both_beat_chance(tmp_path):
    out, training_seconds = run_all(tmp_path, "desk", DESK_SEQUENCE_RUN, ("simnet", "dtw", "chance"), sweep=False)
    assert training_seconds <= TRAINING_BUDGET_SECONDS
    simnet, dtw, chance = (report_ap(out, model, "10-way") for model in ("simnet", "dtw", "chance"))
    assert simnet > dtw > chance
    assert simnet >= 3 * chance
