from __future__ import annotations

from abc import ABC, abstractmethod
from typing import List

import numpy as np


class Classifier(ABC):
    """Anything that maps a batch of spectrograms to class probabilities.

    Implementations: Network (MBConv CNN), LogisticBaseline.
    """

    @property
    @abstractmethod
    def n_classes(self) -> int:
        """Number of output classes."""

    @abstractmethod
    def predict_proba(self, batch: np.ndarray) -> np.ndarray:
        """Return N×C probabilities for an N×1×n_mels×n_frames batch."""

    def predict(self, batch: np.ndarray) -> List[int]:
        return [int(i) for i in np.argmax(self.predict_proba(batch), axis=1)]
