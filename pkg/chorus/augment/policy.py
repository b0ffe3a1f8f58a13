"""Seeded augmentation policy: stretch -> pitch -> noise."""

from __future__ import annotations

from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from chorus.core.types import AudioClip

from .noise import NoisePool, resolve_noise_pool
from .transforms import mix_noise, pitch_shift, time_stretch


class AugmentProbabilities(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    stretch: float = Field(0.5, ge=0.0, le=1.0)
    pitch: float = Field(0.5, ge=0.0, le=1.0)
    noise: float = Field(0.5, ge=0.0, le=1.0)


class AugmentConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    stretch_range: Tuple[float, float] = (0.8, 1.25)
    pitch_range_semitones: Tuple[float, float] = (-2.0, 2.0)
    snr_range_db: Tuple[float, float] = (5.0, 30.0)
    apply_probabilities: AugmentProbabilities = AugmentProbabilities()
    noise_source: str = "pink"

    @model_validator(mode="after")
    def _check_ranges(self) -> "AugmentConfig":
        lo, hi = self.stretch_range
        if not 0.5 <= lo <= hi <= 2.0:
            raise ValueError(f"stretch_range must satisfy 0.5 <= lo <= hi <= 2.0, got {self.stretch_range}")
        lo, hi = self.pitch_range_semitones
        if not -12.0 <= lo <= hi <= 12.0:
            raise ValueError(f"pitch_range_semitones must be ordered within [-12, 12], got {self.pitch_range_semitones}")
        lo, hi = self.snr_range_db
        if not -10.0 <= lo <= hi <= 60.0:
            raise ValueError(f"snr_range_db must be ordered within [-10, 60], got {self.snr_range_db}")
        return self

    @classmethod
    def disabled(cls) -> "AugmentConfig":
        return cls(apply_probabilities=AugmentProbabilities(stretch=0.0, pitch=0.0, noise=0.0))


def augment_policy(
    clip: AudioClip,
    config: AugmentConfig,
    seed: int,
    noise_pool: Optional[NoisePool] = None,
) -> AudioClip:
    """Apply the configured transforms; output depends only on (clip, config, seed)."""
    rng = np.random.default_rng(seed)
    # every draw happens up front so the stream of random numbers is fixed
    u_stretch, u_pitch, u_noise = rng.random(3)
    rate = rng.uniform(*config.stretch_range)
    semitones = rng.uniform(*config.pitch_range_semitones)
    snr_db = rng.uniform(*config.snr_range_db)
    noise_pick = rng.random()
    offset_pick = rng.random()

    probs = config.apply_probabilities
    out = clip
    if u_stretch < probs.stretch:
        out = time_stretch(out, rate)
    if u_pitch < probs.pitch:
        out = pitch_shift(out, semitones)
    if u_noise < probs.noise:
        pool = noise_pool or resolve_noise_pool(config.noise_source, clip.sample_rate_hz)
        noise = pool[int(noise_pick * len(pool))]
        offset = int(offset_pick * len(noise))
        out = mix_noise(out, noise, snr_db, offset=offset)
    return out
