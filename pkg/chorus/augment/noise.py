"""Background noise generation and noise pools."""

from __future__ import annotations

from functools import lru_cache
from pathlib import Path
from typing import List

import numpy as np

from chorus.audio.wav import read_wav
from chorus.core.errors import RateMismatch, SilentNoise
from chorus.core.types import AudioClip
from chorus.utils.logger import get_logger

logger = get_logger(__name__)

PINK_POOL_SIZE = 4
PINK_POOL_SECONDS = 10.0


def pink_noise(n_samples: int, rng: np.random.Generator) -> np.ndarray:
    """1/f noise by spectral shaping of white noise, peak-normalized to 1."""
    if n_samples <= 0:
        return np.zeros(0)
    spectrum = np.fft.rfft(rng.standard_normal(n_samples))
    freqs = np.arange(spectrum.shape[0], dtype=np.float64)
    freqs[0] = 1.0
    shaped = np.fft.irfft(spectrum / np.sqrt(freqs), n=n_samples)
    shaped -= shaped.mean()
    peak = np.max(np.abs(shaped))
    return shaped / peak if peak > 0 else shaped


class NoisePool:
    """Ordered collection of noise clips used by noise-mix augmentation."""

    def __init__(self, clips: List[AudioClip]) -> None:
        if not clips:
            raise SilentNoise("noise pool is empty")
        rates = {c.sample_rate_hz for c in clips}
        if len(rates) != 1:
            raise RateMismatch(f"noise pool mixes sample rates {sorted(rates)}")
        self.clips = clips

    @property
    def sample_rate_hz(self) -> int:
        return self.clips[0].sample_rate_hz

    def __len__(self) -> int:
        return len(self.clips)

    def __getitem__(self, index: int) -> AudioClip:
        return self.clips[index]

    @classmethod
    def pink(cls, sample_rate_hz: int, seed: int = 0) -> "NoisePool":
        rng = np.random.default_rng(seed)
        n = int(round(PINK_POOL_SECONDS * sample_rate_hz))
        return cls([AudioClip(0.5 * pink_noise(n, rng), sample_rate_hz) for _ in range(PINK_POOL_SIZE)])

    @classmethod
    def from_directory(cls, directory: Path, sample_rate_hz: int) -> "NoisePool":
        clips = [read_wav(p) for p in sorted(Path(directory).glob("*.wav"))]
        clips = [c for c in clips if c.power > 0]
        for c in clips:
            if c.sample_rate_hz != sample_rate_hz:
                raise RateMismatch(f"noise clip at {c.sample_rate_hz} Hz, pipeline runs at {sample_rate_hz} Hz")
        logger.info("noise_pool_loaded", directory=str(directory), clips=len(clips))
        return cls(clips)


@lru_cache(maxsize=8)
def _resolve(source: str, sample_rate_hz: int) -> NoisePool:
    if source == "pink":
        return NoisePool.pink(sample_rate_hz)
    return NoisePool.from_directory(Path(source), sample_rate_hz)


def resolve_noise_pool(source: str, sample_rate_hz: int) -> NoisePool:
    """Resolve a noise_source reference ("pink" or a directory of WAVs)."""
    return _resolve(source, sample_rate_hz)


