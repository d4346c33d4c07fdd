"""Class-disjoint train / validation / test splits."""

from __future__ import annotations

import dataclasses
from typing import TYPE_CHECKING

import numpy as np

from simdet.errors import DatasetError

if TYPE_CHECKING:
    from collections.abc import Sequence

SPLIT_NAMES = ("train", "validation", "test")


@dataclasses.dataclass(frozen=True)
class SplitSpec:
    train: tuple[str, ...]
    validation: tuple[str, ...]
    test: tuple[str, ...]

    def __post_init__(self):
        seen: dict[str, str] = {}
        for name in SPLIT_NAMES:
            for class_id in getattr(self, name):
                if class_id in seen:
                    raise DatasetError(f"class {class_id!r} is in both the {seen[class_id]} and {name} splits")
                seen[class_id] = name

    def classes(self, name: str) -> tuple[str, ...]:
        if name not in SPLIT_NAMES:
            raise DatasetError(f"unknown split {name!r}")
        return getattr(self, name)

    def as_dict(self) -> dict[str, list[str]]:
        return {name: list(getattr(self, name)) for name in SPLIT_NAMES}


def make_split(class_ids: Sequence[str], counts: tuple[int, int, int], seed: int) -> SplitSpec:
    """Shuffle ``class_ids`` and cut them into (train, validation, test) of the given sizes."""
    if any(c < 0 for c in counts):
        raise DatasetError(f"split sizes must be nonnegative, got {counts}")
    if sum(counts) > len(class_ids):
        raise DatasetError(f"split sizes {counts} need {sum(counts)} classes, only {len(class_ids)} available")
    order = np.random.default_rng(np.random.SeedSequence([seed, len(class_ids)])).permutation(len(class_ids))
    shuffled = [class_ids[i] for i in order]
    train, validation = counts[0], counts[0] + counts[1]
    return SplitSpec(
        tuple(shuffled[:train]),
        tuple(shuffled[train:validation]),
        tuple(shuffled[validation:validation + counts[2]]),
    )
