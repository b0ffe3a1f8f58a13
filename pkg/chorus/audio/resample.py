"""Kaiser-windowed sinc polyphase resampling."""

from __future__ import annotations

from fractions import Fraction
from math import gcd

import numpy as np
from scipy.signal import firwin, resample_poly

from chorus.core.errors import InvalidParams
from chorus.core.types import AudioClip

KAISER_BETA = 8.0
TAPS_PER_PHASE = 32


def _polyphase(samples: np.ndarray, up: int, down: int) -> np.ndarray:
    g = gcd(up, down)
    up, down = up // g, down // g
    if up == down:
        return samples.copy()
    max_rate = max(up, down)
    half_len = (TAPS_PER_PHASE // 2) * max_rate
    taps = firwin(2 * half_len + 1, 1.0 / max_rate, window=("kaiser", KAISER_BETA))
    return resample_poly(samples, up, down, window=taps)


def resample(clip: AudioClip, target_rate_hz: int) -> AudioClip:
    """Resample to target_rate_hz; output length is round(N * target / source)."""
    if target_rate_hz <= 0:
        raise InvalidParams(f"target rate must be positive, got {target_rate_hz}")
    source = clip.sample_rate_hz
    if target_rate_hz == source:
        return AudioClip(samples=clip.samples.copy(), sample_rate_hz=source)

    n_out = int(round(len(clip) * target_rate_hz / source))
    if len(clip) == 0:
        return AudioClip(samples=np.zeros(0), sample_rate_hz=target_rate_hz)
    out = _polyphase(clip.samples, target_rate_hz, source)[:n_out]
    return AudioClip(samples=out, sample_rate_hz=target_rate_hz)


def resample_ratio(samples: np.ndarray, ratio: float, n_out: int, max_denominator: int = 1000) -> np.ndarray:
    """Resample raw samples by a real-valued ratio (output/input), fixed to n_out samples.

    The ratio is approximated by a fraction with denominator <= max_denominator.
    """
    if ratio <= 0:
        raise InvalidParams(f"resampling ratio must be positive, got {ratio}")
    frac = Fraction(ratio).limit_denominator(max_denominator)
    out = _polyphase(np.asarray(samples, dtype=np.float64), frac.numerator, frac.denominator)
    if out.shape[0] >= n_out:
        return out[:n_out]
    return np.pad(out, (0, n_out - out.shape[0]))
