from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidClip


@dataclass(frozen=True)
class AudioClip:
    """Mono audio: float64 samples in [-1, 1] at a positive sample rate."""

    samples: np.ndarray
    sample_rate_hz: int

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise InvalidClip(f"clip must be mono (1-D), got shape {samples.shape}")
        if self.sample_rate_hz <= 0:
            raise InvalidClip(f"sample rate must be positive, got {self.sample_rate_hz}")
        if not np.all(np.isfinite(samples)):
            raise InvalidClip("clip contains non-finite samples")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate_hz", int(self.sample_rate_hz))

    def __len__(self) -> int:
        return int(self.samples.shape[0])

    @property
    def duration_s(self) -> float:
        return len(self) / self.sample_rate_hz

    @property
    def power(self) -> float:
        """Mean squared amplitude (0 for an empty clip)."""
        if len(self) == 0:
            return 0.0
        return float(np.mean(self.samples**2))

    def with_samples(self, samples: np.ndarray) -> "AudioClip":
        return AudioClip(samples=samples, sample_rate_hz=self.sample_rate_hz)
