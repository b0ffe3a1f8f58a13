"""Confusion matrices, per-class metrics and model evaluation."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
from sklearn.metrics import confusion_matrix as _sk_confusion_matrix

from chorus.augment.noise import NoisePool
from chorus.augment.transforms import mix_noise
from chorus.core.classifier import Classifier
from chorus.core.errors import EmptyMatrix, InvalidParams, LabelOutOfRange, LengthMismatch
from chorus.dsp.features import Featurizer
from chorus.training.dataset import Dataset, example_log_mel, load_clip
from chorus.utils.logger import get_logger
from chorus.utils.seeds import derive_seed

logger = get_logger(__name__)


@dataclass
class ConfusionMatrix:
    counts: np.ndarray  # rows = true class, columns = predicted
    class_names: List[str]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def to_list(self) -> List[List[int]]:
        return [[int(v) for v in row] for row in self.counts]


def confusion_matrix(
    true_labels: Sequence[int],
    predicted_labels: Sequence[int],
    n_classes: int,
    class_names: Optional[Sequence[str]] = None,
) -> ConfusionMatrix:
    if len(true_labels) != len(predicted_labels):
        raise LengthMismatch(f"{len(true_labels)} true labels vs {len(predicted_labels)} predictions")
    for seq in (true_labels, predicted_labels):
        bad = [int(v) for v in seq if not 0 <= int(v) < n_classes]
        if bad:
            raise LabelOutOfRange(f"labels {bad[:5]} outside [0, {n_classes})")
    names = list(class_names) if class_names is not None else [str(i) for i in range(n_classes)]
    if len(true_labels) == 0:
        counts = np.zeros((n_classes, n_classes), dtype=np.int64)
    else:
        counts = _sk_confusion_matrix(true_labels, predicted_labels, labels=list(range(n_classes))).astype(np.int64)
    return ConfusionMatrix(counts=counts, class_names=names)


@dataclass
class ClassMetrics:
    name: str
    precision: float
    recall: float
    f1: float
    support: int
    degenerate: bool = False


@dataclass
class MetricsReport:
    accuracy: float
    classes: List[ClassMetrics]
    macro_precision: float
    macro_recall: float
    macro_f1: float
    micro_precision: float
    micro_recall: float
    micro_f1: float
    confusion: ConfusionMatrix
    groups: Dict[str, Dict[str, dict]] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "macro": {"precision": self.macro_precision, "recall": self.macro_recall, "f1": self.macro_f1},
            "micro": {"precision": self.micro_precision, "recall": self.micro_recall, "f1": self.micro_f1},
            "classes": [
                {
                    "name": c.name,
                    "precision": c.precision,
                    "recall": c.recall,
                    "f1": c.f1,
                    "support": c.support,
                    "degenerate": c.degenerate,
                }
                for c in self.classes
            ],
            "confusion": self.confusion.to_list(),
            "groups": self.groups,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "MetricsReport":
        classes = [ClassMetrics(**c) for c in doc["classes"]]
        return cls(
            accuracy=doc["accuracy"],
            classes=classes,
            macro_precision=doc["macro"]["precision"],
            macro_recall=doc["macro"]["recall"],
            macro_f1=doc["macro"]["f1"],
            micro_precision=doc["micro"]["precision"],
            micro_recall=doc["micro"]["recall"],
            micro_f1=doc["micro"]["f1"],
            confusion=ConfusionMatrix(np.asarray(doc["confusion"], dtype=np.int64), [c.name for c in classes]),
            groups=doc.get("groups", {}),
        )


def _ratio(num: float, den: float) -> float:
    return float(num / den) if den > 0 else 0.0


def _f1(p: float, r: float) -> float:
    return 2 * p * r / (p + r) if p + r > 0 else 0.0


def metrics_from_confusion(cm: ConfusionMatrix) -> MetricsReport:
    """Per-class and macro metrics; zero divisions give 0 with the degenerate flag set.

    The F1 denominator counts: a class with p + r == 0 is flagged too.

    Macro means cover classes with support > 0.
    """
    counts = cm.counts
    total = cm.total
    if total == 0:
        raise EmptyMatrix("confusion matrix has no entries")
    tp = np.diag(counts).astype(np.float64)
    predicted = counts.sum(axis=0).astype(np.float64)
    support = counts.sum(axis=1)

    classes: List[ClassMetrics] = []
    for c, name in enumerate(cm.class_names):
        p = _ratio(tp[c], predicted[c])
        r = _ratio(tp[c], support[c])
        degenerate = predicted[c] == 0 or support[c] == 0 or p + r == 0
        classes.append(ClassMetrics(name, p, r, _f1(p, r), int(support[c]), bool(degenerate)))

    included = [m for m in classes if m.support > 0]
    micro_p = _ratio(tp.sum(), predicted.sum())
    micro_r = _ratio(tp.sum(), support.sum())
    return MetricsReport(
        accuracy=float(tp.sum() / total),
        classes=classes,
        macro_precision=float(np.mean([m.precision for m in included])),
        macro_recall=float(np.mean([m.recall for m in included])),
        macro_f1=float(np.mean([m.f1 for m in included])),
        micro_precision=micro_p,
        micro_recall=micro_r,
        micro_f1=_f1(micro_p, micro_r),
        confusion=cm,
    )


@dataclass
class NoiseCorruption:
    """Fixed-SNR noise mixed into every evaluated clip; clip i uses seed derive_seed(seed, i)."""

    pool: NoisePool
    snr_db: float
    seed: int = 0

    def __post_init__(self) -> None:
        if not -10.0 <= self.snr_db <= 60.0:
            raise InvalidParams(f"snr_db must be in [-10, 60], got {self.snr_db}")


def _min_frames(model: Classifier) -> int:
    config = getattr(model, "config", None)
    return int(getattr(config, "total_stride", 1))


def model_inputs(
    dataset: Dataset,
    indices: Sequence[int],
    featurizer: Featurizer,
    min_frames: int = 1,
    cache_dir: Optional[Union[str, Path]] = None,
    corruption: Optional[NoiseCorruption] = None,
    threads: int = 1,
) -> List[np.ndarray]:
    """Full-length normalized log-mel per example (padded only up to min_frames)."""

    def _one(i: int) -> np.ndarray:
        example = dataset[i]
        if corruption is None:
            data = example_log_mel(example, featurizer, cache_dir)
        else:
            if example.audio_path is None:
                raise InvalidParams(f"example {example.key!r} has no audio to corrupt")
            clip = load_clip(example, featurizer.params.sample_rate_hz)
            rng = np.random.default_rng(derive_seed(corruption.seed, i))
            noise = corruption.pool[int(rng.integers(len(corruption.pool)))]
            offset = int(rng.integers(len(noise)))
            data = featurizer.log_mel(mix_noise(clip, noise, corruption.snr_db, offset=offset))
        if data.shape[1] < min_frames:
            data = featurizer.crop(data, min_frames)
        return featurizer.normalize(data)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(_one, indices))
    return [_one(i) for i in indices]


def predict_inputs(model: Classifier, inputs: Sequence[np.ndarray], batch_size: int = 32) -> List[int]:
    """Argmax predictions; equal-length inputs are batched together, order preserved."""
    predictions = [0] * len(inputs)
    by_length: Dict[int, List[int]] = {}
    for pos, x in enumerate(inputs):
        by_length.setdefault(x.shape[1], []).append(pos)
    for positions in by_length.values():
        for s in range(0, len(positions), batch_size):
            chunk = positions[s : s + batch_size]
            batch = np.stack([inputs[p] for p in chunk])[:, None, :, :]
            for p, label in zip(chunk, model.predict(batch)):
                predictions[p] = label
    return predictions


def group_accuracy(
    true_labels: Sequence[int], predicted: Sequence[int], groups: Sequence[str]
) -> Dict[str, dict]:
    out: Dict[str, dict] = {}
    for key in sorted(set(groups)):
        idx = [i for i, g in enumerate(groups) if g == key]
        hits = sum(1 for i in idx if true_labels[i] == predicted[i])
        out[key] = {"n": len(idx), "accuracy": hits / len(idx)}
    return out


def evaluate_model(
    model: Classifier,
    dataset: Dataset,
    indices: Sequence[int],
    featurizer: Featurizer,
    cache_dir: Optional[Union[str, Path]] = None,
    corruption: Optional[NoiseCorruption] = None,
    group_by: str = "location",
    batch_size: int = 32,
    threads: int = 1,
) -> MetricsReport:
    """Argmax of softmax per example over the given split, plus confusion and group breakdown."""
    indices = list(indices)
    if not indices:
        raise EmptyMatrix("cannot evaluate an empty split")
    inputs = model_inputs(dataset, indices, featurizer, _min_frames(model), cache_dir, corruption, threads)
    predicted = predict_inputs(model, inputs, batch_size)
    truth = [dataset[i].label for i in indices]
    cm = confusion_matrix(truth, predicted, dataset.n_classes, dataset.class_names)
    report = metrics_from_confusion(cm)
    groups = [dataset[i].metadata.get(group_by) for i in indices]
    if all(g is not None for g in groups):
        report.groups = {group_by: group_accuracy(truth, predicted, groups)}
    logger.info(
        "evaluation_complete",
        examples=len(indices),
        accuracy=report.accuracy,
        macro_f1=report.macro_f1,
        corrupted=corruption is not None,
    )
    return report
