"""Multinomial logistic regression on time-averaged log-mel vectors."""

from __future__ import annotations

from pathlib import Path
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from chorus.core.classifier import Classifier
from chorus.core.errors import InvalidParams, ShapeMismatch
from chorus.dsp.features import Featurizer
from chorus.nn.layers import cross_entropy, softmax, softmax_cross_entropy_backward
from chorus.utils.logger import get_logger

from .dataset import Dataset, example_log_mel

logger = get_logger(__name__)


class LogisticBaseline(Classifier):
    def __init__(self, n_features: int, n_classes: int, init_scale: float = 0.0, seed: int = 0) -> None:
        rng = np.random.default_rng(seed)
        self.weights = init_scale * rng.standard_normal((n_classes, n_features))
        self.bias = np.zeros(n_classes)

    @property
    def n_classes(self) -> int:
        return int(self.weights.shape[0])

    def proba_from_vectors(self, vectors: np.ndarray) -> np.ndarray:
        return softmax(vectors @ self.weights.T + self.bias)

    def predict_proba(self, batch: np.ndarray) -> np.ndarray:
        batch = np.asarray(batch)
        if batch.ndim != 4 or batch.shape[2] != self.weights.shape[1]:
            raise ShapeMismatch(f"batch {batch.shape} does not carry {self.weights.shape[1]} mel bins")
        return self.proba_from_vectors(batch[:, 0].mean(axis=2))

    def gradient(self, vectors: np.ndarray, labels: Sequence[int]) -> Tuple[np.ndarray, np.ndarray]:
        """Gradient of mean cross-entropy: ((P - Y)ᵀ X / N, column sums of (P - Y) / N)."""
        dlogits = softmax_cross_entropy_backward(self.proba_from_vectors(vectors), labels)
        return dlogits.T @ vectors, dlogits.sum(axis=0)

    def loss(self, vectors: np.ndarray, labels: Sequence[int]) -> float:
        return cross_entropy(self.proba_from_vectors(vectors), labels)

    def fit(self, vectors: np.ndarray, labels: Sequence[int], lr: float, epochs: int) -> "LogisticBaseline":
        """Full-batch gradient descent."""
        for _ in range(epochs):
            dw, db = self.gradient(vectors, labels)
            self.weights -= lr * dw
            self.bias -= lr * db
        return self


def mean_mel_vectors(
    dataset: Dataset,
    indices: Sequence[int],
    featurizer: Featurizer,
    cache_dir: Optional[Union[str, Path]] = None,
) -> np.ndarray:
    """Normalized log-mel averaged over time, one row per example."""
    return np.stack(
        [featurizer.normalize(example_log_mel(dataset[i], featurizer, cache_dir)).mean(axis=1) for i in indices]
    )


def train_baseline(
    dataset: Dataset,
    featurizer: Featurizer,
    indices: Optional[Sequence[int]] = None,
    lr: float = 0.5,
    epochs: int = 300,
    seed: int = 0,
    init_scale: float = 0.0,
    cache_dir: Optional[Union[str, Path]] = None,
) -> LogisticBaseline:
    if len(dataset) == 0:
        raise InvalidParams("cannot train a baseline on an empty dataset")
    indices = list(range(len(dataset))) if indices is None else list(indices)
    vectors = mean_mel_vectors(dataset, indices, featurizer, cache_dir)
    labels = [dataset[i].label for i in indices]
    model = LogisticBaseline(vectors.shape[1], dataset.n_classes, init_scale=init_scale, seed=seed)
    model.fit(vectors, labels, lr, epochs)
    logger.info("baseline_trained", examples=len(indices), final_loss=model.loss(vectors, labels))
    return model
