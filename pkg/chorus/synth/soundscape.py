"""Synthetic soundscapes with known ground-truth labels."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import date, timedelta
from pathlib import Path
from typing import List, Tuple, Union

import numpy as np
import pandas as pd
from scipy.signal import lfilter
from scipy.signal.windows import hann

from chorus.audio.wav import write_wav
from chorus.augment.noise import pink_noise
from chorus.core.errors import IoFailure
from chorus.core.types import AudioClip
from chorus.utils.logger import get_logger
from chorus.utils.seeds import derive_seed

from .species import SoundscapeConfig, SpeciesModel

logger = get_logger(__name__)

CALL_PEAK = 0.7
AM_DEPTH = 0.5
DISTRACTOR_GAIN = 10.0 ** (-6.0 / 20.0)
MANIFEST_COLUMNS = ["path", "species", "location", "date", "duration_s"]
SITES = ["site-a", "site-b", "site-c", "site-d", "site-e"]


def _syllable(species: SpeciesModel, rng: np.random.Generator, rate: int) -> np.ndarray:
    dur = rng.uniform(*species.syllable_dur_s)
    f0 = rng.uniform(*species.f0_hz)
    slope = rng.uniform(*species.chirp_slope_hz_per_s)
    am_rate = rng.uniform(*species.am_rate_hz)

    n = max(1, int(round(dur * rate)))
    t = np.arange(n) / rate
    phase = 2.0 * np.pi * (f0 * t + 0.5 * slope * t**2)
    top_freq = max(f0, f0 + slope * dur)
    tone = np.zeros(n)
    for h, weight in enumerate(species.harmonic_weights, start=1):
        if h * top_freq < rate / 2:
            tone += weight * np.sin(h * phase)
    if am_rate > 0:
        tone *= (1.0 + AM_DEPTH * np.sin(2.0 * np.pi * am_rate * t)) / (1.0 + AM_DEPTH)
    return tone * hann(n, sym=True)


def synth_call(species: SpeciesModel, seed: int, rate: int) -> AudioClip:
    """One call: n syllables (chirp + harmonics + envelope) separated by gaps, peak 0.7."""
    rng = np.random.default_rng(seed)
    n_syllables = int(rng.integers(species.n_syllables[0], species.n_syllables[1] + 1))
    parts: List[np.ndarray] = []
    for i in range(n_syllables):
        if i:
            gap = rng.uniform(*species.gap_s)
            parts.append(np.zeros(int(round(gap * rate))))
        parts.append(_syllable(species, rng, rate))
    call = np.concatenate(parts)
    peak = np.max(np.abs(call))
    if peak > 0:
        call = CALL_PEAK * call / peak
    return AudioClip(samples=call, sample_rate_hz=rate)


@dataclass
class CallPlacement:
    species_index: int
    onset: int
    samples: np.ndarray
    distractor: bool = False


@dataclass
class SoundscapeRender:
    clip: AudioClip
    label: int
    placements: List[CallPlacement] = field(default_factory=list)
    scale: float = 1.0


def _anthropogenic_hum(n: int, rate: int, rng: np.random.Generator) -> np.ndarray:
    """Engine-like hum: low fundamental with harmonics over a slow rumble."""
    t = np.arange(n) / rate
    f0 = rng.uniform(50.0, 120.0)
    hum = sum(np.sin(2 * np.pi * h * f0 * t + rng.uniform(0, 2 * np.pi)) / h for h in range(1, 5))
    rumble = lfilter([0.02], [1.0, -0.98], rng.standard_normal(n))
    rumble /= max(np.max(np.abs(rumble)), 1e-12)
    mix = 0.7 * hum / 2.1 + 0.3 * rumble
    return mix / max(np.max(np.abs(mix)), 1e-12)


def render_clip(config: SoundscapeConfig, species_index: int, seed: int) -> SoundscapeRender:
    """Compose a labeled soundscape and report where every call was placed."""
    if not 0 <= species_index < len(config.species):
        raise IndexError(f"species_index {species_index} out of range")
    rate = config.sample_rate_hz
    n = int(round(config.clip_duration_s * rate))
    rng = np.random.default_rng(seed)

    mix = np.zeros(n)
    if config.background > 0:
        mix += config.background * pink_noise(n, rng)
    if config.anthropogenic_level > 0:
        mix += config.anthropogenic_level * _anthropogenic_hum(n, rate, rng)

    # calls go into disjoint slots so they never overlap
    n_calls = int(rng.integers(1, 4))
    slot = n // n_calls
    placements: List[CallPlacement] = []
    species = config.species[species_index]
    for k in range(n_calls):
        call = synth_call(species, int(rng.integers(0, 2**31 - 1)), rate).samples[:slot]
        onset = k * slot + int(rng.integers(0, slot - call.shape[0] + 1))
        mix[onset : onset + call.shape[0]] += call
        placements.append(CallPlacement(species_index, onset, call))

    if config.distractor_probability > 0 and rng.random() < config.distractor_probability:
        others = [i for i in range(len(config.species)) if i != species_index]
        other = others[int(rng.integers(0, len(others)))]
        call = DISTRACTOR_GAIN * synth_call(config.species[other], int(rng.integers(0, 2**31 - 1)), rate).samples[:n]
        onset = int(rng.integers(0, n - call.shape[0] + 1))
        mix[onset : onset + call.shape[0]] += call
        placements.append(CallPlacement(other, onset, call, distractor=True))

    scale = 1.0
    peak = np.max(np.abs(mix)) if n else 0.0
    if peak > 1.0:
        scale = 1.0 / peak
        mix *= scale
    return SoundscapeRender(AudioClip(mix, rate), species_index, placements, scale)


def synth_clip(config: SoundscapeConfig, species_index: int, seed: int) -> Tuple[AudioClip, int]:
    render = render_clip(config, species_index, seed)
    return render.clip, render.label


def _metadata(seed: int) -> Tuple[str, str]:
    rng = np.random.default_rng(seed)
    site = SITES[int(rng.integers(0, len(SITES)))]
    day = date(2024, 3, 1) + timedelta(days=int(rng.integers(0, 120)))
    return site, day.isoformat()


def generate_dataset(
    config: SoundscapeConfig,
    out_dir: Union[str, Path],
    seed: int,
    threads: int = 1,
) -> Path:
    """Write clips_per_species WAVs per species plus manifest.csv; returns the manifest path."""
    root = Path(out_dir)
    try:
        root.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise IoFailure(f"could not create {root}: {e}") from e

    jobs = [(s, i) for s in range(len(config.species)) for i in range(config.clips_per_species)]

    def _job(job: Tuple[int, int]) -> dict:
        species_index, clip_index = job
        name = config.species[species_index].name
        clip_seed = derive_seed(seed, species_index, clip_index)
        clip, _ = synth_clip(config, species_index, clip_seed)
        rel = Path("audio") / name / f"{name}_{clip_index:04d}.wav"
        write_wav(clip, root / rel)
        location, day = _metadata(clip_seed)
        return {
            "path": rel.as_posix(),
            "species": name,
            "location": location,
            "date": day,
            "duration_s": round(clip.duration_s, 3),
        }

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        rows = list(pool.map(_job, jobs))

    manifest = root / "manifest.csv"
    frame = pd.DataFrame(rows, columns=MANIFEST_COLUMNS)
    try:
        frame.to_csv(manifest, index=False, encoding="utf-8", float_format="%.3f", lineterminator="\n")
    except OSError as e:
        raise IoFailure(f"could not write {manifest}: {e}") from e
    logger.info(
        "dataset_generated",
        manifest=str(manifest),
        species=len(config.species),
        clips=len(rows),
    )
    return manifest
