"""simdet: synthesise, train, evaluate and check gradients from the command line.

Usage: simdet COMMAND [--config PATH] [--seed U64] [--track image|sequence]
                      [--out DIR] [--single-thread] [-v] ...

Exit status is 0 on success and 1 on any error or failed check.
"""

from __future__ import annotations

import logging
import os
import sys
from pathlib import Path

TYPE_CHECKING = False
if TYPE_CHECKING:
    import argparse
    from collections.abc import MutableMapping, Sequence

    from simdet.config import RunConfig

# thread-pool sizes read once by BLAS / OpenMP runtimes when numpy loads
THREAD_VARIABLES = (
    "OMP_NUM_THREADS",
    "OPENBLAS_NUM_THREADS",
    "MKL_NUM_THREADS",
    "VECLIB_MAXIMUM_THREADS",
    "NUMEXPR_NUM_THREADS",
)


def pin_single_thread(environ: MutableMapping[str, str] = os.environ) -> None:
    for name in THREAD_VARIABLES:
        environ[name] = "1"


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Defaults, then the config file, then flags given on the command line."""
    from simdet.config import RunConfig, read_config, with_overrides

    config = read_config(args.config) if args.config else RunConfig()
    return with_overrides(
        config,
        seed=args.seed,
        track=args.track,
        output_dir=args.output_dir,
        epochs=getattr(args, "epochs", None),
        retrain_with_validation=getattr(args, "retrain_with_validation", None),
    )


def run(args: argparse.Namespace) -> int:
    from simdet.cli import commands

    config = resolve_config(args)
    paths = commands.RunPaths(config.output_dir, args.dataset or config.dataset_dir)
    workers = 1 if args.single_thread else config.workers
    if args.command == "synth":
        return commands.cmd_synth(config, paths)
    if args.command == "train":
        return commands.cmd_train(config, paths, args.resume, workers, progress=args.verbose)
    if args.command == "eval":
        return commands.cmd_eval(config, paths, args.model, args.checkpoint, workers)
    if args.command == "sweep":
        return commands.cmd_sweep(config, paths, args.model, args.checkpoint, workers)
    return commands.cmd_gradcheck(config)


def _report_error(err: Exception) -> None:
    from simdet.config import describe_messages
    from simdet.errors import ConfigError

    print(f"simdet: error: {err}", file=sys.stderr)
    if isinstance(err, ConfigError):
        for line in describe_messages(err):
            print(f"  {line}", file=sys.stderr)


def main(argv: Sequence[str] | None = None) -> int:
    from simdet.cli.parser import create_parser

    args = create_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    if args.single_thread and "numpy" not in sys.modules:
        pin_single_thread()

    from simdet.errors import SimDetError

    try:
        return run(args)
    except SimDetError as err:
        _report_error(err)
        return 1
    except OSError as err:
        path = f" ({Path(err.filename)})" if err.filename else ""
        print(f"simdet: error: {err.strerror or err}{path}", file=sys.stderr)
        return 1
