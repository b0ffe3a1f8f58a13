from collections import Counter

import numpy as np
import pytest

from chorus.core.errors import ClassTooSmall, InvalidParams
from chorus.training.splits import kfold_split, stratified_split


def test_hundred_items_ten_classes():
    labels = [i % 10 for i in range(100)]
    train, val, test = stratified_split(labels, (0.7, 0.15, 0.15), seed=0)
    assert (len(train), len(val), len(test)) == (70, 15, 15)
    for part, expected in ((train, 7), (val, (1, 2)), (test, (1, 2))):
        counts = Counter(labels[i] for i in part)
        assert set(counts) == set(range(10))
        for n in counts.values():
            assert n == expected if isinstance(expected, int) else n in expected


@pytest.mark.parametrize("seed", range(5))
def test_split_is_a_partition(seed):
    rng = np.random.default_rng(seed)
    labels = list(rng.integers(0, 6, size=80))
    labels += [c for c in range(6) for _ in range(3)]
    train, val, test = stratified_split(labels, (0.6, 0.2, 0.2), seed=seed)
    assert sorted(train + val + test) == list(range(len(labels)))
    assert not (set(train) & set(val) or set(train) & set(test) or set(val) & set(test))
    for c in range(6):
        members = [i for i, y in enumerate(labels) if y == c]
        assert len([i for i in train if labels[i] == c]) >= 1
        assert len(members) > 0


def test_split_determinism():
    labels = [i % 4 for i in range(40)]
    assert stratified_split(labels, (0.7, 0.15, 0.15), 3) == stratified_split(labels, (0.7, 0.15, 0.15), 3)
    assert stratified_split(labels, (0.7, 0.15, 0.15), 3) != stratified_split(labels, (0.7, 0.15, 0.15), 4)


def test_split_errors():
    with pytest.raises(ClassTooSmall):
        stratified_split([0, 0, 0, 1, 1], (0.7, 0.15, 0.15), 0)
    with pytest.raises(InvalidParams):
        stratified_split([0, 0, 0], (0.5, 0.5, 0.1), 0)


def test_kfold_fifty_items_five_classes():
    labels = [i % 5 for i in range(50)]
    folds = kfold_split(labels, k=5, seed=1)
    assert len(folds) == 5
    assert sorted(i for fold in folds for i in fold) == list(range(50))
    for fold in folds:
        assert Counter(labels[i] for i in fold) == {c: 2 for c in range(5)}


def test_kfold_uneven_classes_differ_by_at_most_one():
    labels = [0] * 13 + [1] * 7
    folds = kfold_split(labels, k=3, seed=0)
    for c in (0, 1):
        sizes = [sum(1 for i in fold if labels[i] == c) for fold in folds]
        assert max(sizes) - min(sizes) <= 1


def test_kfold_errors():
    with pytest.raises(ClassTooSmall):
        kfold_split([0] * 10 + [1] * 3, k=5, seed=0)
    with pytest.raises(InvalidParams):
        kfold_split([0, 1, 0, 1], k=1, seed=0)
