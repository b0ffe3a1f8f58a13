from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from chorus.core.errors import InvalidParams, RateMismatch
from chorus.core.types import AudioClip

from .source import AudioSource


class StreamConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    window_s: float = Field(5.0, gt=0.0)
    hop_s: float = Field(2.5, gt=0.0)
    min_fill_ratio: float = 0.5
    queue_capacity: int = Field(8, ge=1)
    realtime_pacing: bool = False
    presence_threshold: float = Field(0.5, ge=0.0, le=1.0)

    @model_validator(mode="after")
    def _check(self) -> "StreamConfig":
        if self.hop_s > self.window_s:
            raise ValueError(f"hop_s ({self.hop_s}) must not exceed window_s ({self.window_s})")
        if not 0.0 < self.min_fill_ratio <= 1.0:
            raise ValueError(f"min_fill_ratio must be in (0, 1], got {self.min_fill_ratio}")
        return self


@dataclass
class Window:
    clip: AudioClip  # always window_s long; a trailing partial window is zero-padded
    start_sample: int
    n_valid: int
    ready_at: Optional[float] = None

    @property
    def start_s(self) -> float:
        return self.start_sample / self.clip.sample_rate_hz

    @property
    def end_s(self) -> float:
        """End of the real (unpadded) data."""
        return (self.start_sample + self.n_valid) / self.clip.sample_rate_hz

    @property
    def padded(self) -> bool:
        return self.n_valid < len(self.clip)


def stream_windows(source: AudioSource, config: StreamConfig, sample_rate_hz: int) -> Iterator[Window]:
    """Sliding windows over a chunked source, emitted as soon as each one is complete.

    After the last full window, only the next window position is considered, and
    only when the last full window did not already reach the end of the stream.
    It is zero-padded and kept if its real data fills at least min_fill_ratio.
    """
    if source.sample_rate_hz != sample_rate_hz:
        raise RateMismatch(f"source rate {source.sample_rate_hz} Hz != pipeline rate {sample_rate_hz} Hz")
    rate = sample_rate_hz
    win = int(round(config.window_s * rate))
    hop = int(round(config.hop_s * rate))
    if win < 1 or hop < 1:
        raise InvalidParams(f"window ({win}) and hop ({hop}) must each span at least one sample at {rate} Hz")

    buf = np.zeros(0)
    buf_start = 0
    next_start = 0
    total = 0
    last_full_end = 0
    for chunk in source.chunks():
        buf = np.concatenate([buf, chunk])
        total += chunk.shape[0]
        while next_start + win <= total:
            lo = next_start - buf_start
            yield Window(AudioClip(buf[lo : lo + win].copy(), rate), next_start, win)
            last_full_end = next_start + win
            next_start += hop
            buf = buf[next_start - buf_start :]
            buf_start = next_start

    remaining = total - next_start
    if remaining > 0 and last_full_end < total and remaining >= config.min_fill_ratio * win:
        lo = next_start - buf_start
        data = np.zeros(win)
        data[:remaining] = buf[lo : lo + remaining]
        yield Window(AudioClip(data, rate), next_start, remaining)
