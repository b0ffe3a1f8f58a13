from __future__ import annotations

import numpy as np
import pytest

from chorus.core.types import AudioClip
from chorus.dsp.features import Featurizer, MelParams
from chorus.nn.model import NetworkConfig
from chorus.training.dataset import Dataset


@pytest.fixture
def make_sine():
    def _make(freq_hz: float = 1000.0, seconds: float = 1.0, rate: int = 16000, amplitude: float = 0.5) -> AudioClip:
        t = np.arange(int(round(seconds * rate))) / rate
        return AudioClip(amplitude * np.sin(2 * np.pi * freq_hz * t), rate)

    return _make


@pytest.fixture
def toy_mel() -> MelParams:
    # 0.32 s at 800 Hz gives exactly 16 frames
    return MelParams(sample_rate_hz=800, n_fft=16, hop=16, n_mels=8, fmin_hz=0.0, fmax_hz=400.0)


@pytest.fixture
def toy_featurizer(toy_mel) -> Featurizer:
    return Featurizer(toy_mel)


@pytest.fixture
def micro_config() -> NetworkConfig:
    return NetworkConfig.micro(n_classes=2, n_mels=8)


def separable_features(n_per_class: int = 12, seed: int = 0):
    """Two classes of 8 x 16 log-mel patterns: energy in the low or the high half of the bins."""
    rng = np.random.default_rng(seed)
    features, labels = [], []
    for label in (0, 1):
        for _ in range(n_per_class):
            x = -8.0 + 0.3 * rng.standard_normal((8, 16))
            rows = slice(0, 4) if label == 0 else slice(4, 8)
            x[rows] += 6.0
            features.append(x)
            labels.append(label)
    return features, labels


@pytest.fixture
def toy_dataset() -> Dataset:
    features, labels = separable_features()
    return Dataset.from_arrays(features, labels, class_names=["low", "high"])
