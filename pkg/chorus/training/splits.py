"""Stratified train/val/test splits and k-fold partitions."""

from __future__ import annotations

from collections import Counter
from typing import List, Sequence, Tuple

import numpy as np
from sklearn.model_selection import StratifiedKFold

from chorus.core.errors import ClassTooSmall, InvalidParams

MIN_CLASS_SIZE = 3


def _check_class_sizes(labels: Sequence[int], minimum: int, what: str) -> Counter:
    counts = Counter(int(y) for y in labels)
    small = {c: n for c, n in counts.items() if n < minimum}
    if small:
        raise ClassTooSmall(f"{what} needs at least {minimum} members per class; too small: {small}")
    return counts


def _largest_remainder(n: int, ratios: Sequence[float], deficits: np.ndarray) -> np.ndarray:
    exact = n * np.asarray(ratios, dtype=np.float64)
    alloc = np.floor(exact).astype(int)
    frac = exact - alloc
    # ties go to the set that is furthest behind its running target
    order = sorted(range(len(ratios)), key=lambda i: (-round(frac[i], 12), -deficits[i], i))
    for i in order[: n - int(alloc.sum())]:
        alloc[i] += 1
    return alloc


def stratified_split(
    labels: Sequence[int], ratios: Tuple[float, float, float], seed: int
) -> Tuple[List[int], List[int], List[int]]:
    """Per-class shuffle then largest-remainder allocation into (train, val, test)."""
    if len(ratios) != 3 or any(r <= 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise InvalidParams(f"ratios must be three positive numbers summing to 1, got {ratios}")
    counts = _check_class_sizes(labels, MIN_CLASS_SIZE, "stratified_split")
    y = np.asarray(labels, dtype=np.int64)
    rng = np.random.default_rng(seed)
    sets: Tuple[List[int], List[int], List[int]] = ([], [], [])
    deficits = np.zeros(3)
    for cls in sorted(counts):
        members = rng.permutation(np.flatnonzero(y == cls))
        alloc = _largest_remainder(len(members), ratios, deficits)
        deficits += len(members) * np.asarray(ratios) - alloc
        start = 0
        for target, size in zip(sets, alloc):
            target.extend(int(i) for i in members[start : start + size])
            start += size
    return sorted(sets[0]), sorted(sets[1]), sorted(sets[2])


def kfold_split(labels: Sequence[int], k: int, seed: int) -> List[List[int]]:
    """k stratified folds (held-out index lists); per-class fold counts differ by at most one."""
    if k < 2:
        raise InvalidParams(f"k must be >= 2, got {k}")
    _check_class_sizes(labels, k, f"{k}-fold split")
    y = np.asarray(labels, dtype=np.int64)
    splitter = StratifiedKFold(n_splits=k, shuffle=True, random_state=seed)
    return [sorted(int(i) for i in held_out) for _, held_out in splitter.split(np.zeros(len(y)), y)]
