"""Time-domain augmentation transforms."""

from __future__ import annotations

import librosa
import numpy as np

from chorus.audio.resample import resample_ratio
from chorus.core.errors import (
    InvalidParams,
    RateMismatch,
    RateOutOfRange,
    SemitonesOutOfRange,
    SilentNoise,
    SilentSignal,
)
from chorus.core.types import AudioClip

VOCODER_N_FFT = 1024
VOCODER_HOP = 256


def _clamp(samples: np.ndarray) -> np.ndarray:
    return np.clip(samples, -1.0, 1.0)


def time_stretch(clip: AudioClip, rate: float) -> AudioClip:
    """Phase-vocoder stretch; rate > 1 shortens, output length round(N / rate)."""
    if not 0.5 <= rate <= 2.0:
        raise RateOutOfRange(f"stretch rate must be in [0.5, 2.0], got {rate}")
    if rate == 1.0:
        return clip.with_samples(clip.samples.copy())
    stretched = librosa.effects.time_stretch(
        clip.samples, rate=rate, n_fft=VOCODER_N_FFT, hop_length=VOCODER_HOP
    )
    return clip.with_samples(_clamp(stretched))


def pitch_shift(clip: AudioClip, semitones: float) -> AudioClip:
    """Shift pitch by stretching with 1 / r then resampling back by r, r = 2^(semitones/12)."""
    if not -12.0 <= semitones <= 12.0:
        raise SemitonesOutOfRange(f"semitones must be in [-12, 12], got {semitones}")
    if semitones == 0:
        return clip.with_samples(clip.samples.copy())
    ratio = 2.0 ** (semitones / 12.0)
    stretched = time_stretch(clip, 1.0 / ratio)
    shifted = resample_ratio(stretched.samples, 1.0 / ratio, n_out=len(clip))
    return clip.with_samples(_clamp(shifted))


def fit_noise(noise: np.ndarray, n_samples: int, offset: int = 0) -> np.ndarray:
    """Tile (when short) and crop noise to n_samples starting at offset."""
    if noise.shape[0] == 0:
        raise SilentNoise("noise clip is empty")
    reps = -(-(offset + n_samples) // noise.shape[0])
    return np.tile(noise, reps)[offset : offset + n_samples]


def noise_gain(signal: np.ndarray, noise: np.ndarray, snr_db: float) -> float:
    """g such that P(signal) / P(g * noise) = 10^(snr_db / 10)."""
    p_signal = float(np.mean(signal**2)) if signal.size else 0.0
    p_noise = float(np.mean(noise**2)) if noise.size else 0.0
    if p_signal <= 0.0:
        raise SilentSignal("signal power is zero")
    if p_noise <= 0.0:
        raise SilentNoise("noise power is zero")
    return float(np.sqrt(p_signal / (p_noise * 10.0 ** (snr_db / 10.0))))


def mix_noise(signal: AudioClip, noise: AudioClip, snr_db: float, offset: int = 0) -> AudioClip:
    """Add noise scaled to the requested SNR; output clamped to [-1, 1]."""
    if signal.sample_rate_hz != noise.sample_rate_hz:
        raise RateMismatch(f"signal {signal.sample_rate_hz} Hz vs noise {noise.sample_rate_hz} Hz")
    if not -10.0 <= snr_db <= 60.0:
        raise InvalidParams(f"snr_db must be in [-10, 60], got {snr_db}")
    if signal.power <= 0.0:
        raise SilentSignal("signal power is zero")
    if noise.power <= 0.0:
        raise SilentNoise("noise power is zero")
    segment = fit_noise(noise.samples, len(signal), offset)
    gain = noise_gain(signal.samples, segment, snr_db)
    return signal.with_samples(_clamp(signal.samples + gain * segment))
