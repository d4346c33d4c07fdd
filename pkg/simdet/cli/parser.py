"""Command-line arguments of ``simdet``."""

from __future__ import annotations

import argparse
from pathlib import Path

COMMANDS = ("synth", "train", "eval", "sweep", "gradcheck")
MODELS = ("simnet", "dtw", "exemplar", "chance")


def _seed(text: str) -> int:
    try:
        value = int(text, 10)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned 64-bit integer, got {value}")
    return value


def _positive(text: str) -> int:
    try:
        value = int(text, 10)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {value}")
    return value


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, metavar="PATH",
                        help="Key: value config file; command-line flags override its values.")
    common.add_argument("--seed", type=_seed, metavar="U64",
                        help="Seed from which every random draw of the run derives.")
    common.add_argument("--track", choices=("image", "sequence"),
                        help="Task: tiled glyph images or keyword-in-utterance sequences.")
    common.add_argument("--out", type=Path, metavar="DIR", dest="output_dir",
                        help="Directory receiving all artefacts of the run.")
    common.add_argument("--dataset", type=Path, metavar="DIR",
                        help="Dataset directory. Default '<out>/dataset'.")
    common.add_argument("--single-thread", action="store_true",
                        help="Pin numerical libraries to one thread and score serially, "
                             "so identical runs give byte-identical artefacts.")
    common.add_argument("-v", "--verbose", action="store_true",
                        help="Log progress at INFO level.")
    return common


def _model_options() -> argparse.ArgumentParser:
    model = argparse.ArgumentParser(add_help=False)
    model.add_argument("--model", choices=MODELS, default="simnet",
                       help="What to evaluate: the similarity network, a baseline, or random guessing. Default 'simnet'.")
    model.add_argument("--checkpoint", type=Path, metavar="PATH",
                       help="Similarity network weights. Default '<out>/checkpoints/best.simd'.")
    return model


def create_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="simdet",
        description="One-shot detection with attention similarity networks: "
                    "synthesise data, train, evaluate, and check gradients.",
    )
    commands = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    common = _common_options()
    model = _model_options()

    commands.add_parser("synth", parents=[common],
                        help="Write the train, validation and N-way test sets to the dataset directory.")

    train = commands.add_parser("train", parents=[common],
                                help="Train the similarity network, keeping the best validation checkpoint.")
    train.add_argument("--epochs", type=_positive, metavar="K",
                       help="Number of epochs (overrides the config).")
    train.add_argument("--resume", action="store_true",
                       help="Continue from '<out>/checkpoints/last.simd'.")
    train.add_argument("--retrain-with-validation", action="store_true", default=None,
                       help="After selection, retrain on training and validation pairs for the selected epoch count.")

    commands.add_parser("eval", parents=[common, model],
                        help="Calibrate on validation, evaluate on test and write the report.")

    commands.add_parser("sweep", parents=[common, model],
                        help="AP of the calibrated detections at several IoU thresholds.")

    commands.add_parser("gradcheck", parents=[common],
                        help="Compare tape, closed-form and finite-difference gradients.")
    return parser
