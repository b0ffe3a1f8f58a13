"""Audio sources that deliver mono samples in chunks."""

from __future__ import annotations

import sys
import time
from abc import ABC, abstractmethod
from pathlib import Path
from typing import BinaryIO, Callable, Iterator, Optional, Union

import numpy as np

from chorus.audio.wav import PCM16_SCALE, read_wav
from chorus.core.errors import InvalidParams

DEFAULT_CHUNK_S = 0.1


class AudioSource(ABC):
    """A producer of float64 sample chunks at a fixed rate."""

    #: live sources cannot be paused, so a full queue drops windows instead of blocking
    live: bool = False

    @property
    @abstractmethod
    def sample_rate_hz(self) -> int:
        """Rate of every chunk."""

    @abstractmethod
    def chunks(self) -> Iterator[np.ndarray]:
        """Yield consecutive sample chunks until the stream ends."""


def _chunk_size(rate: int, chunk_s: float) -> int:
    if chunk_s <= 0:
        raise InvalidParams(f"chunk_s must be positive, got {chunk_s}")
    return max(1, int(round(chunk_s * rate)))


class ArraySource(AudioSource):
    def __init__(self, samples: np.ndarray, sample_rate_hz: int, chunk_s: float = DEFAULT_CHUNK_S) -> None:
        self.samples = np.asarray(samples, dtype=np.float64)
        self._rate = int(sample_rate_hz)
        self._chunk = _chunk_size(self._rate, chunk_s)

    @property
    def sample_rate_hz(self) -> int:
        return self._rate

    def chunks(self) -> Iterator[np.ndarray]:
        for s in range(0, self.samples.shape[0], self._chunk):
            yield self.samples[s : s + self._chunk]


class FileReplaySource(ArraySource):
    """Replays a WAV file, optionally paced at wall-clock rate."""

    def __init__(
        self,
        path: Union[str, Path],
        chunk_s: float = DEFAULT_CHUNK_S,
        realtime: bool = False,
        clock: Callable[[], float] = time.monotonic,
        sleep: Callable[[float], None] = time.sleep,
    ) -> None:
        clip = read_wav(path)
        super().__init__(clip.samples, clip.sample_rate_hz, chunk_s)
        self.path = Path(path)
        self.live = realtime
        self._clock = clock
        self._sleep = sleep

    def chunks(self) -> Iterator[np.ndarray]:
        if not self.live:
            yield from super().chunks()
            return
        start = self._clock()
        delivered = 0
        for chunk in super().chunks():
            delivered += chunk.shape[0]
            # a chunk becomes available once its last sample has been "recorded"
            wait = start + delivered / self._rate - self._clock()
            if wait > 0:
                self._sleep(wait)
            yield chunk


class StdinPcmSource(AudioSource):
    """Raw little-endian PCM-16 mono from a byte stream (standard input by default)."""

    live = True

    def __init__(
        self,
        sample_rate_hz: int,
        stream: Optional[BinaryIO] = None,
        chunk_s: float = DEFAULT_CHUNK_S,
    ) -> None:
        if sample_rate_hz <= 0:
            raise InvalidParams(f"sample rate must be positive, got {sample_rate_hz}")
        self._rate = int(sample_rate_hz)
        self._stream = stream if stream is not None else sys.stdin.buffer
        self._chunk = _chunk_size(self._rate, chunk_s)

    @property
    def sample_rate_hz(self) -> int:
        return self._rate

    def chunks(self) -> Iterator[np.ndarray]:
        pending = b""
        while True:
            data = self._stream.read(2 * self._chunk)
            if not data:
                break
            pending += data
            usable = len(pending) - len(pending) % 2
            if usable:
                yield np.frombuffer(pending[:usable], dtype="<i2").astype(np.float64) / PCM16_SCALE
                pending = pending[usable:]
