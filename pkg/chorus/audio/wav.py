"""PCM-16 WAV reading and writing.

Only 16-bit integer PCM is accepted; everything else is an explicit error.
"""

from __future__ import annotations

import warnings
from pathlib import Path
from typing import Union

import numpy as np
from scipy.io import wavfile

from chorus.core.errors import AudioFileNotFound, IoFailure, MalformedHeader, UnsupportedFormat
from chorus.core.types import AudioClip

PCM16_SCALE = 32768.0

PathLike = Union[str, Path]


def _check_riff_magic(path: Path) -> None:
    with path.open("rb") as fh:
        head = fh.read(12)
    if len(head) < 12 or head[:4] != b"RIFF" or head[8:12] != b"WAVE":
        raise MalformedHeader(f"{path}: not a RIFF/WAVE file")


def read_wav(path: PathLike) -> AudioClip:
    """Read a PCM-16 WAV file (mono or stereo) into a mono clip in [-1, 1)."""
    p = Path(path)
    if not p.is_file():
        raise AudioFileNotFound(f"Audio file not found: {p}")
    _check_riff_magic(p)

    try:
        with warnings.catch_warnings():
            # unknown chunks are skipped with a warning
            warnings.simplefilter("ignore", wavfile.WavFileWarning)
            rate, data = wavfile.read(p)
    except ValueError as e:
        message = str(e)
        if "format" in message.lower() or "bit" in message.lower():
            raise UnsupportedFormat(f"{p}: {message}") from e
        raise MalformedHeader(f"{p}: {message}") from e
    except EOFError as e:
        raise MalformedHeader(f"{p}: truncated file") from e

    if data.dtype != np.int16:
        raise UnsupportedFormat(f"{p}: expected 16-bit PCM, got {data.dtype}")
    if data.ndim == 2 and data.shape[1] > 2:
        raise UnsupportedFormat(f"{p}: {data.shape[1]} channels (max 2)")

    samples = data.astype(np.float64) / PCM16_SCALE
    if samples.ndim == 2:
        samples = samples.mean(axis=1) if samples.shape[1] == 2 else samples[:, 0]
    return AudioClip(samples=samples, sample_rate_hz=int(rate))


def quantize_pcm16(samples: np.ndarray) -> np.ndarray:
    """Clamp to [-1, 1) and quantize by round(x * 32768) into int16."""
    scaled = np.round(np.clip(samples, -1.0, 1.0) * PCM16_SCALE)
    return np.clip(scaled, -32768, 32767).astype("<i2")


def write_wav(clip: AudioClip, path: PathLike) -> None:
    """Write a clip as a PCM-16 mono WAV file."""
    p = Path(path)
    try:
        p.parent.mkdir(parents=True, exist_ok=True)
        wavfile.write(p, clip.sample_rate_hz, quantize_pcm16(clip.samples))
    except OSError as e:
        raise IoFailure(f"could not write {p}: {e}") from e
