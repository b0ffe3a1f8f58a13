"""Sliding-window classification of incoming audio."""

from typing import Optional

from chorus.core.errors import InvalidParams

from .classifier import (
    EventSink,
    JsonLinesSink,
    ListSink,
    StreamEvent,
    StreamSummary,
    WindowQueue,
    classify_stream,
    latency_stats,
    presence_table,
)
from .source import DEFAULT_CHUNK_S, ArraySource, AudioSource, FileReplaySource, StdinPcmSource
from .windows import StreamConfig, Window, stream_windows


def create_source(
    spec: str,
    sample_rate_hz: Optional[int] = None,
    realtime: bool = False,
    chunk_s: float = DEFAULT_CHUNK_S,
) -> AudioSource:
    """'-' reads raw PCM-16 from standard input (rate required); anything else is a WAV path."""
    if spec == "-":
        if sample_rate_hz is None:
            raise InvalidParams("reading PCM from standard input requires --rate")
        return StdinPcmSource(sample_rate_hz, chunk_s=chunk_s)
    return FileReplaySource(spec, chunk_s=chunk_s, realtime=realtime)


__all__ = [
    "ArraySource",
    "AudioSource",
    "EventSink",
    "FileReplaySource",
    "JsonLinesSink",
    "ListSink",
    "StdinPcmSource",
    "StreamConfig",
    "StreamEvent",
    "StreamSummary",
    "Window",
    "WindowQueue",
    "classify_stream",
    "create_source",
    "latency_stats",
    "presence_table",
    "stream_windows",
]
