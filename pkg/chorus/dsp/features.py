"""Log-mel spectrogram extraction and normalization."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Literal, Optional

import librosa
import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from chorus.core.errors import InvalidParams, RateMismatch, TooShort
from chorus.core.types import AudioClip

ZSCORE_EPS = 1e-8


class MelParams(BaseModel):
    """Free parameters of the log-mel transform."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    sample_rate_hz: int = Field(16000, gt=0)
    n_fft: int = Field(512, gt=0)
    hop: int = Field(256, gt=0)
    n_mels: int = Field(64, ge=1)
    fmin_hz: float = Field(50.0, ge=0.0)
    fmax_hz: float = 8000.0
    log_floor: float = Field(1e-10, gt=0.0)

    def check(self) -> None:
        """Raise InvalidParams if the cross-field invariants do not hold."""
        if not 0 < self.hop <= self.n_fft:
            raise InvalidParams(f"hop must be in (0, n_fft]; got hop={self.hop}, n_fft={self.n_fft}")
        if not 0 <= self.fmin_hz < self.fmax_hz <= self.sample_rate_hz / 2:
            raise InvalidParams(
                f"need 0 <= fmin < fmax <= sr/2; got fmin={self.fmin_hz}, fmax={self.fmax_hz}, "
                f"sr={self.sample_rate_hz}"
            )
        if self.n_mels < 1 or self.log_floor <= 0:
            raise InvalidParams("n_mels must be >= 1 and log_floor > 0")

    def n_frames(self, n_samples: int) -> int:
        """Frame count for an unpadded STFT of n_samples (0 when too short)."""
        if n_samples < self.n_fft:
            return 0
        return (n_samples - self.n_fft) // self.hop + 1


@dataclass(frozen=True)
class MelSpectrogram:
    data: np.ndarray  # n_mels x n_frames, natural-log energies
    params: MelParams

    @property
    def n_frames(self) -> int:
        return int(self.data.shape[1])


def hz_to_mel(freq_hz):
    """HTK mel scale: 2595 * log10(1 + f / 700)."""
    return librosa.hz_to_mel(freq_hz, htk=True)


def stft_magnitude(clip: AudioClip, n_fft: int, hop: int) -> np.ndarray:
    """Magnitude of the one-sided, Hann-windowed STFT without centering.

    Returns a (n_fft // 2 + 1) x n_frames matrix.
    """
    if len(clip) < n_fft:
        raise TooShort(f"clip has {len(clip)} samples, need at least n_fft={n_fft}")
    spectrum = librosa.stft(
        clip.samples,
        n_fft=n_fft,
        hop_length=hop,
        win_length=n_fft,
        window="hann",
        center=False,
    )
    return np.abs(spectrum)


def build_mel_filterbank(params: MelParams) -> np.ndarray:
    """Peak-normalized triangular HTK filters, n_mels x (n_fft // 2 + 1)."""
    params.check()
    return librosa.filters.mel(
        sr=params.sample_rate_hz,
        n_fft=params.n_fft,
        n_mels=params.n_mels,
        fmin=params.fmin_hz,
        fmax=params.fmax_hz,
        htk=True,
        norm=None,
        dtype=np.float64,
    )


def mel_center_frequencies(params: MelParams) -> np.ndarray:
    """Peak frequency (Hz) of every mel filter."""
    points = librosa.mel_frequencies(
        n_mels=params.n_mels + 2, fmin=params.fmin_hz, fmax=params.fmax_hz, htk=True
    )
    return points[1:-1]


def log_mel_from_power(power: np.ndarray, filterbank: np.ndarray, log_floor: float) -> np.ndarray:
    return np.log(filterbank @ power + log_floor)


def log_mel_spectrogram(clip: AudioClip, params: MelParams) -> MelSpectrogram:
    """ln(filterbank · |STFT|² + log_floor)."""
    if clip.sample_rate_hz != params.sample_rate_hz:
        raise RateMismatch(f"clip rate {clip.sample_rate_hz} Hz != mel rate {params.sample_rate_hz} Hz")
    magnitude = stft_magnitude(clip, params.n_fft, params.hop)
    data = log_mel_from_power(magnitude**2, _filterbank(params), params.log_floor)
    return MelSpectrogram(data=data, params=params)


def zscore_normalize(spec: MelSpectrogram) -> MelSpectrogram:
    """Whole-matrix z-score with population sigma: (x - mu) / (sigma + 1e-8)."""
    data = spec.data
    return MelSpectrogram(data=(data - data.mean()) / (data.std() + ZSCORE_EPS), params=spec.params)


_FILTERBANKS: dict = {}


def _filterbank(params: MelParams) -> np.ndarray:
    fb = _FILTERBANKS.get(params)
    if fb is None:
        fb = build_mel_filterbank(params)
        _FILTERBANKS[params] = fb
    return fb


class CorpusStats(BaseModel):
    """Mean/std of log-mel entries over a training corpus."""

    model_config = ConfigDict(frozen=True)

    mean: float
    std: float

    @classmethod
    def fit(cls, spectrograms: Iterable[np.ndarray]) -> "CorpusStats":
        total = 0.0
        total_sq = 0.0
        count = 0
        for data in spectrograms:
            total += float(np.sum(data))
            total_sq += float(np.sum(np.square(data)))
            count += data.size
        if count == 0:
            raise InvalidParams("cannot fit corpus statistics on an empty corpus")
        mean = total / count
        var = max(total_sq / count - mean * mean, 0.0)
        return cls(mean=mean, std=float(np.sqrt(var)))


class FeatureConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    normalization: Literal["spectrogram", "corpus"] = "spectrogram"
    cache_dir: Optional[str] = None


class Featurizer:
    """Shared clip → model-input path: log-mel, optional crop, normalization."""

    def __init__(
        self,
        params: MelParams,
        normalization: str = "spectrogram",
        corpus_stats: Optional[CorpusStats] = None,
    ) -> None:
        params.check()
        if normalization == "corpus" and corpus_stats is None:
            raise InvalidParams("corpus normalization needs fitted CorpusStats")
        self.params = params
        self.normalization = normalization
        self.corpus_stats = corpus_stats

    def log_mel(self, clip: AudioClip) -> np.ndarray:
        if len(clip) < self.params.n_fft:
            clip = clip.with_samples(np.pad(clip.samples, (0, self.params.n_fft - len(clip))))
        return log_mel_spectrogram(clip, self.params).data

    def crop(self, data: np.ndarray, n_frames: int, offset: int = 0) -> np.ndarray:
        """Crop (from offset) or pad with silence to exactly n_frames."""
        if data.shape[1] >= n_frames:
            return data[:, offset : offset + n_frames]
        silence = np.log(self.params.log_floor)
        return np.pad(data, ((0, 0), (0, n_frames - data.shape[1])), constant_values=silence)

    def normalize(self, data: np.ndarray) -> np.ndarray:
        if self.normalization == "corpus":
            assert self.corpus_stats is not None
            return (data - self.corpus_stats.mean) / (self.corpus_stats.std + ZSCORE_EPS)
        return zscore_normalize(MelSpectrogram(data=data, params=self.params)).data

    def __call__(self, clip: AudioClip) -> np.ndarray:
        return self.normalize(self.log_mel(clip))

    def describe(self) -> dict:
        return {
            "mel": self.params.model_dump(),
            "normalization": self.normalization,
            "corpus_stats": self.corpus_stats.model_dump() if self.corpus_stats else None,
        }

    @classmethod
    def from_description(cls, description: dict) -> "Featurizer":
        stats = description.get("corpus_stats")
        return cls(
            MelParams(**description["mel"]),
            normalization=description.get("normalization", "spectrogram"),
            corpus_stats=CorpusStats(**stats) if stats else None,
        )
