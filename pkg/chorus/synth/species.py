from __future__ import annotations

from typing import List, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

Range = Tuple[float, float]


def _ordered(name: str, value: Range, positive: bool = True) -> None:
    lo, hi = value
    if lo > hi:
        raise ValueError(f"{name} must be ordered (lo <= hi), got {value}")
    if positive and lo < 0:
        raise ValueError(f"{name} must be non-negative, got {value}")


class SpeciesModel(BaseModel):
    """Parametric vocalization model for one synthetic species."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str
    f0_hz: Range
    chirp_slope_hz_per_s: Range = (0.0, 0.0)
    n_syllables: Tuple[int, int] = (2, 4)
    syllable_dur_s: Range = (0.08, 0.15)
    gap_s: Range = (0.03, 0.08)
    harmonic_weights: Tuple[float, ...] = (1.0,)
    am_rate_hz: Range = (0.0, 0.0)

    @model_validator(mode="after")
    def _check(self) -> "SpeciesModel":
        _ordered("f0_hz", self.f0_hz)
        if self.f0_hz[0] <= 0:
            raise ValueError("f0_hz must be positive")
        _ordered("chirp_slope_hz_per_s", self.chirp_slope_hz_per_s, positive=False)
        _ordered("n_syllables", self.n_syllables)
        if self.n_syllables[0] < 1:
            raise ValueError("n_syllables must be >= 1")
        _ordered("syllable_dur_s", self.syllable_dur_s)
        if self.syllable_dur_s[0] <= 0:
            raise ValueError("syllable_dur_s must be positive")
        _ordered("gap_s", self.gap_s)
        _ordered("am_rate_hz", self.am_rate_hz)
        if not self.harmonic_weights or sum(self.harmonic_weights) > 1.5:
            raise ValueError("harmonic_weights must be non-empty and sum to <= 1.5")
        return self

    def check_rate(self, sample_rate_hz: int) -> None:
        if self.f0_hz[1] >= sample_rate_hz / 2:
            raise ValueError(f"{self.name}: f0 upper bound {self.f0_hz[1]} Hz is not below Nyquist")


class SoundscapeConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    species: List[SpeciesModel] = Field(default_factory=lambda: default_benchmark_species())
    clips_per_species: int = Field(100, ge=1)
    clip_duration_s: float = Field(4.0, ge=1.0)
    sample_rate_hz: int = Field(16000, gt=0)
    background: float = Field(0.05, ge=0.0, le=1.0)
    distractor_probability: float = Field(0.2, ge=0.0, le=1.0)
    anthropogenic_level: float = Field(0.0, ge=0.0, le=1.0)

    @model_validator(mode="after")
    def _check(self) -> "SoundscapeConfig":
        if len(self.species) < 2:
            raise ValueError("a soundscape needs at least 2 species")
        names = [s.name for s in self.species]
        if len(set(names)) != len(names):
            raise ValueError("species names must be unique")
        for s in self.species:
            s.check_rate(self.sample_rate_hz)
        return self


def default_benchmark_species() -> List[SpeciesModel]:
    """Eight species: six in separate bands, the last two sharing one band."""
    return [
        SpeciesModel(
            name="marsh_piper",
            f0_hz=(1000.0, 1250.0),
            n_syllables=(3, 5),
            syllable_dur_s=(0.10, 0.16),
            gap_s=(0.05, 0.10),
            harmonic_weights=(1.0, 0.3),
        ),
        SpeciesModel(
            name="reed_chatter",
            f0_hz=(1650.0, 1900.0),
            n_syllables=(4, 7),
            syllable_dur_s=(0.05, 0.08),
            gap_s=(0.02, 0.04),
            harmonic_weights=(0.8, 0.4),
            am_rate_hz=(25.0, 40.0),
        ),
        SpeciesModel(
            name="meadow_riser",
            f0_hz=(2300.0, 2600.0),
            chirp_slope_hz_per_s=(2000.0, 3500.0),
            n_syllables=(2, 4),
            syllable_dur_s=(0.12, 0.18),
            gap_s=(0.06, 0.12),
        ),
        SpeciesModel(
            name="canopy_whistler",
            f0_hz=(3100.0, 3400.0),
            n_syllables=(1, 2),
            syllable_dur_s=(0.30, 0.45),
            gap_s=(0.10, 0.20),
            harmonic_weights=(1.0, 0.2),
        ),
        SpeciesModel(
            name="thicket_trill",
            f0_hz=(3900.0, 4200.0),
            n_syllables=(8, 12),
            syllable_dur_s=(0.025, 0.04),
            gap_s=(0.015, 0.03),
        ),
        SpeciesModel(
            name="ridge_faller",
            f0_hz=(5000.0, 5300.0),
            chirp_slope_hz_per_s=(-4000.0, -2500.0),
            n_syllables=(2, 3),
            syllable_dur_s=(0.12, 0.16),
            gap_s=(0.08, 0.14),
        ),
        SpeciesModel(
            name="willow_warbler_north",
            f0_hz=(6000.0, 6400.0),
            chirp_slope_hz_per_s=(-300.0, 600.0),
            n_syllables=(3, 6),
            syllable_dur_s=(0.06, 0.11),
            gap_s=(0.03, 0.07),
            am_rate_hz=(0.0, 12.0),
        ),
        SpeciesModel(
            name="willow_warbler_south",
            f0_hz=(6100.0, 6500.0),
            chirp_slope_hz_per_s=(0.0, 900.0),
            n_syllables=(3, 6),
            syllable_dur_s=(0.07, 0.12),
            gap_s=(0.03, 0.07),
            am_rate_hz=(0.0, 12.0),
        ),
    ]
