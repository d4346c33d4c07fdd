"""Run configuration: the ``Key: value`` file, its validation and its defaults.

A config file is a block of RFC 2822 style headers, one key per line,
continuation lines indented. Lines starting with ``#`` and blank lines are
ignored. Keys are matched case-insensitively. Every run writes the
resolved configuration back out as ``run-config.txt``.
"""

from __future__ import annotations

import dataclasses
import re
from email.parser import HeaderParser
from pathlib import Path
from typing import TYPE_CHECKING

from simdet.errors import ConfigError
from simdet.tensorcore.optim import SgdConfig

if TYPE_CHECKING:
    from collections.abc import Callable, Iterator, Mapping, Sequence
    from typing import Any, TypeAlias

    # (line number, message)
    Message: TypeAlias = tuple[int, str]
    MessageIterator: TypeAlias = Iterator[Message]

CONFIG_FILE_NAME = "run-config.txt"
TRACKS = ("image", "sequence")
MODEL_PRESETS = ("desk", "large")
DEFAULT_N_WAY = {"image": (5, 10), "sequence": (10,)}
MAX_SEED = 2 ** 64 - 1

# any sequence of letters, digits or '-', followed by a single ':' and a space or end of line
KEY_PATTERN = re.compile(r"^([a-z0-9\-]+):(?: |$)", re.ASCII | re.IGNORECASE)


#######################
#  Value converters   #
#######################


def _integer(minimum: int = 0, maximum: int | None = None) -> Callable[[str], int]:
    def convert(text: str) -> int:
        try:
            value = int(text, 10)
        except ValueError:
            raise ValueError(f"expected an integer, got {text!r}") from None
        if value < minimum or (maximum is not None and value > maximum):
            upper = "" if maximum is None else f" and at most {maximum}"
            raise ValueError(f"must be at least {minimum}{upper}, got {value}")
        return value
    return convert


def _real(low: float, high: float | None = None, closed_low: bool = True) -> Callable[[str], float]:
    def convert(text: str) -> float:
        try:
            value = float(text)
        except ValueError:
            raise ValueError(f"expected a number, got {text!r}") from None
        too_low = value < low if closed_low else value <= low
        if too_low or (high is not None and value > high) or value != value:
            bracket = "[" if closed_low else "("
            raise ValueError(f"must lie in {bracket}{low}, {'inf' if high is None else high}], got {value}")
        return value
    return convert


def _choice(values: Sequence[str]) -> Callable[[str], str]:
    def convert(text: str) -> str:
        if text.lower() not in values:
            raise ValueError(f"must be one of {', '.join(values)}, got {text!r}")
        return text.lower()
    return convert


def _flag(text: str) -> bool:
    lowered = text.lower()
    if lowered in {"yes", "true", "on", "1"}:
        return True
    if lowered in {"no", "false", "off", "0"}:
        return False
    raise ValueError(f"expected yes or no, got {text!r}")


def _listed(item: Callable[[str], Any], length: int | None = None) -> Callable[[str], tuple]:
    def convert(text: str) -> tuple:
        parts = [part for raw in text.split(",") if (part := raw.strip())]
        if length is not None and len(parts) != length:
            raise ValueError(f"expected {length} comma-separated values, got {len(parts)}")
        return tuple(item(part) for part in parts)
    return convert


def _path(text: str) -> Path:
    return Path(text)


def _optional_path(text: str) -> Path | None:
    return Path(text) if text else None


def _setting(key: str, default, parse: Callable[[str], Any], doc: str):
    return dataclasses.field(default=default, metadata={"key": key, "parse": parse, "doc": doc})


@dataclasses.dataclass(frozen=True)
class RunConfig:
    """Everything a run depends on; a run is reproducible from this and nothing else."""

    track: str = _setting("Track", "image", _choice(TRACKS), "Which task to run: ``image`` (tiled glyphs) or ``sequence`` (keyword in utterance).")
    seed: int = _setting("Seed", 0, _integer(0, MAX_SEED), "Unsigned 64-bit seed from which every random draw of the run derives.")
    grid_size: int = _setting("Grid-Size", 2, _integer(2, 4), "Image track: targets are n×n grids of glyph tiles.")
    n_way: tuple[int, ...] = _setting("N-Way", (), _listed(_integer(1)), "Comma list of N for the N-way evaluation sets; empty means 5, 10 for images and 10 for sequences.")
    train_classes: int = _setting("Train-Classes", 60, _integer(1), "Number of classes in the training split.")
    validation_classes: int = _setting("Validation-Classes", 20, _integer(1), "Number of classes in the validation split.")
    test_classes: int = _setting("Test-Classes", 20, _integer(1), "Number of classes in the test split.")
    train_pairs: int = _setting("Train-Pairs", 1024, _integer(2), "Balanced training pairs per epoch; must be even.")
    eval_targets: int = _setting("Eval-Targets", 20, _integer(1), "Targets per N-way validation and test set.")
    instances_per_class: int = _setting("Instances-Per-Class", 20, _integer(2), "Image track: distinct renderings per synthetic glyph class.")
    corpus_dir: Path | None = _setting("Corpus-Dir", None, _optional_path, "Image track: load classes from a directory of class sub-directories instead of synthesising glyphs.")
    corpus_invert: bool = _setting("Corpus-Invert", False, _flag, "Invert loaded corpus images so strokes are bright on a dark background.")
    negatives_per_class: int = _setting("Negatives-Per-Class", 0, _integer(0), "Image track: training instances per class in the exemplar baseline's negative set; 0 takes every instance.")
    model_preset: str = _setting("Model-Preset", "desk", _choice(MODEL_PRESETS), "Embedding network architecture: ``desk`` (4 layers) or ``large`` (8 layers).")
    temperature: float = _setting("Temperature", 1.0 / 3.0, _real(0.0, closed_low=False), "Attention softmax temperature T.")
    learning_rate: float = _setting("Learning-Rate", 0.1, _real(0.0), "SGD learning rate; zero keeps the parameters frozen.")
    minibatch_size: int = _setting("Minibatch-Size", 64, _integer(1), "Pairs per SGD step.")
    epochs: int = _setting("Epochs", 4, _integer(1), "Passes over the training pairs.")
    retrain_with_validation: bool = _setting("Retrain-With-Validation", False, _flag, "Train on training and validation pairs together for the selected epoch count.")
    iou_threshold: float = _setting("IoU-Threshold", 0.5, _real(0.0, 1.0, closed_low=False), "Overlap a detection needs with the truth box to count as correct.")
    recall_levels: tuple[float, ...] = _setting("Recall-Levels", (0.5, 0.9, 0.99), _listed(_real(0.0, 1.0, closed_low=False)), "Recall levels at which precision is reported.")
    sweep_thresholds: tuple[float, ...] = _setting("Sweep-Thresholds", (0.2, 0.3, 0.4, 0.5), _listed(_real(0.0, 1.0, closed_low=False)), "IoU thresholds of the AP sweep.")
    dtw_sigma: float = _setting("DTW-Sigma", 50.0, _real(0.0, closed_low=False), "Scale σ turning DTW alignment cost into a similarity.")
    sequence_frames: int = _setting("Sequence-Frames", 200, _integer(1), "Sequence track: frames per target utterance.")
    sequence_channels: int = _setting("Sequence-Channels", 16, _integer(1), "Sequence track: feature channels per frame.")
    template_frames: tuple[int, ...] = _setting("Template-Frames", (35, 40), _listed(_integer(1), 2), "Sequence track: shortest and longest keyword template, in frames.")
    distractors: int = _setting("Distractors", 1, _integer(0), "Sequence track: words of other classes placed in every target.")
    insert_noise: float = _setting("Insert-Noise", 0.1, _real(0.0), "Sequence track: standard deviation of the noise added to every spoken instance.")
    workers: int = _setting("Workers", 4, _integer(1), "Threads used to score evaluation targets.")
    output_dir: Path = _setting("Output-Dir", Path("simdet-run"), _path, "Directory receiving the dataset, checkpoints, CSV files and reports.")

    def __post_init__(self):
        if messages := list(check_run_config(self)):
            raise ConfigError("invalid configuration", messages=messages)

    @property
    def n_ways(self) -> tuple[int, ...]:
        return self.n_way or DEFAULT_N_WAY[self.track]

    @property
    def split_counts(self) -> tuple[int, int, int]:
        return self.train_classes, self.validation_classes, self.test_classes

    @property
    def class_count(self) -> int:
        return sum(self.split_counts)

    @property
    def sgd(self) -> SgdConfig:
        return SgdConfig(self.learning_rate, self.minibatch_size)

    @property
    def dataset_dir(self) -> Path:
        return self.output_dir / "dataset"


def config_fields() -> list[dataclasses.Field]:
    return list(dataclasses.fields(RunConfig))


KEYS = {f.metadata["key"].lower(): f for f in config_fields()}


##########################
#  Cross-field checks    #
##########################


def check_run_config(config: RunConfig) -> MessageIterator:
    """Relations between settings; line 0 means "not tied to a line"."""
    if config.train_pairs % 2:
        yield 0, f"Train-Pairs must be even, got {config.train_pairs}"
    low, high = config.template_frames
    if low > high:
        yield 0, f"Template-Frames must be ascending, got {low}, {high}"
    if high >= config.sequence_frames:
        yield 0, f"Template-Frames upper bound {high} must be shorter than Sequence-Frames {config.sequence_frames}"
    if list(config.sweep_thresholds) != sorted(set(config.sweep_thresholds)):
        yield 0, "Sweep-Thresholds must be strictly ascending"
    if not config.recall_levels:
        yield 0, "Recall-Levels must list at least one level"
    if config.track == "sequence" and config.corpus_dir is not None:
        yield 0, "Corpus-Dir only applies to the image track"


##########################
#  File-level checks     #
##########################


def _logical_lines(lines: Sequence[str]) -> list[tuple[int, str]]:
    """Numbered lines with comments and blank lines removed."""
    return [(num, line) for num, line in enumerate(lines, start=1) if line.strip() and not line.lstrip().startswith("#")]


def check_keys(lines: Sequence[str]) -> MessageIterator:
    seen: dict[str, int] = {}
    for line_num, line in _logical_lines(lines):
        if line[0].isspace():
            if not seen:
                yield line_num, "Continuation line before the first key"
            continue
        if not (match := KEY_PATTERN.match(line)):
            yield line_num, "Lines must have the form 'Key: value'"
            continue
        key = match[1].lower()
        if key not in KEYS:
            yield line_num, f"Unknown key: {match[1]}"
        elif key in seen:
            yield line_num, f"Duplicate key: {match[1]} (first given on line {seen[key]})"
        else:
            seen[key] = line_num


def _key_lines(lines: Sequence[str]) -> dict[str, int]:
    found = {}
    for line_num, line in _logical_lines(lines):
        if match := KEY_PATTERN.match(line):
            found.setdefault(match[1].lower(), line_num)
    return found


def check_values(values: Mapping[str, str], lines: Mapping[str, int], parsed: dict[str, Any]) -> MessageIterator:
    """Convert every value, storing successes in ``parsed`` by field name."""
    for key, text in values.items():
        field = KEYS[key]
        try:
            parsed[field.name] = field.metadata["parse"](" ".join(text.split()))
        except ValueError as err:
            yield lines.get(key, 0), f"{field.metadata['key']}: {err}"


def parse_config(text: str, source: Path | str | None = None, base: RunConfig | None = None) -> RunConfig:
    """Parse a config file's text on top of ``base`` (the defaults when omitted).

    All problems are collected before raising a single :class:`ConfigError`.
    """
    lines = text.splitlines()
    messages = list(check_keys(lines))
    if messages:
        raise ConfigError("invalid configuration file", source, messages)

    body = "\n".join(line for _, line in _logical_lines(lines)) + "\n"
    metadata = HeaderParser().parsestr(body)
    values = {key.lower(): value for key, value in metadata.items()}
    parsed: dict[str, Any] = {}
    messages = list(check_values(values, _key_lines(lines), parsed))
    if messages:
        raise ConfigError("invalid configuration file", source, messages)

    try:
        return dataclasses.replace(base or RunConfig(), **parsed)
    except ConfigError as err:
        raise ConfigError("invalid configuration file", source, err.messages) from None


def read_config(path: Path, base: RunConfig | None = None) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ConfigError("config file does not exist", path) from None
    return parse_config(text, path, base)


def with_overrides(config: RunConfig, **overrides) -> RunConfig:
    """Apply command-line values; ``None`` means "not given"."""
    given = {name: value for name, value in overrides.items() if value is not None}
    return dataclasses.replace(config, **given) if given else config


def format_value(value) -> str:
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, tuple):
        return ", ".join(format_value(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def format_config(config: RunConfig) -> str:
    lines = []
    for field in config_fields():
        value = getattr(config, field.name)
        if value is None:
            continue
        lines.append(f"{field.metadata['key']}: {format_value(value)}".rstrip())
    return "\n".join(lines) + "\n"


def write_config(directory: Path, config: RunConfig) -> Path:
    path = Path(directory) / CONFIG_FILE_NAME
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_config(config), encoding="utf-8")
    return path


def describe_messages(error: ConfigError) -> Iterator[str]:
    """Human-readable lines for every collected message, ``file:line: message`` style."""
    where = "" if error.source is None else f"{error.source}:"
    for line_num, msg in error.messages:
        yield f"{where}{line_num}:  {msg}" if line_num else f"{where} {msg}".lstrip()
