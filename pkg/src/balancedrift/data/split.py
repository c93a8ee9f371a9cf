from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..seeding import rng_from
from .dataset import Dataset, DatasetError


@dataclass(frozen=True)
class SplitPair:
    train: Dataset
    test: Dataset
    test_fraction: float
    seed: int
    train_index: np.ndarray
    test_index: np.ndarray


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def allocate_test_rows(class_counts, test_fraction: float) -> np.ndarray:
    """Per-class test sizes: total rounded half-up, split by largest remainder.

    Remainder ties go to the larger class, then to the lower label, which keeps
    each class within one row of ``test_fraction * count``.
    """
    counts = np.asarray(class_counts, dtype=np.int64)
    total = _round_half_up(test_fraction * counts.sum())
    exact = test_fraction * counts
    alloc = np.floor(exact).astype(np.int64)
    remainder = exact - alloc
    order = sorted(range(len(counts)), key=lambda c: (-remainder[c], -counts[c], c))
    for c in order[: max(total - alloc.sum(), 0)]:
        alloc[c] += 1
    return alloc


def stratified_split(d: Dataset, test_fraction: float = 0.2, seed: int = 0) -> SplitPair:
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    counts = d.class_counts()
    if counts.min() < 2:
        raise DatasetError(
            f"class {int(np.argmin(counts))} has {counts.min()} member(s); need 2 to stratify"
        )
    alloc = allocate_test_rows(counts, test_fraction)
    # keep at least one member of every class on each side
    alloc = np.clip(alloc, 1, counts - 1)
    rng = rng_from(seed)
    test_parts = []
    for c in (0, 1):
        members = np.flatnonzero(d.target == c)
        test_parts.append(rng.permutation(members)[: alloc[c]])
    test_idx = np.sort(np.concatenate(test_parts))
    mask = np.zeros(d.n_rows, dtype=bool)
    mask[test_idx] = True
    train_idx = np.flatnonzero(~mask)
    return SplitPair(
        train=d.take(train_idx, name=f"{d.name}:train"),
        test=d.take(test_idx, name=f"{d.name}:test"),
        test_fraction=test_fraction,
        seed=seed,
        train_index=train_idx,
        test_index=test_idx,
    )
