"""Producer/consumer stream classification with latency accounting."""

from __future__ import annotations

import json
import sys
import threading
import time
from abc import ABC, abstractmethod
from collections import deque
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, TextIO

import numpy as np

from chorus.core.classifier import Classifier
from chorus.core.errors import EmptyEvents, RateMismatch
from chorus.dsp.features import Featurizer
from chorus.utils.logger import get_logger

from .source import AudioSource
from .windows import StreamConfig, Window, stream_windows

logger = get_logger(__name__)

CAPTURE_JOIN_TIMEOUT_S = 1.0


class WindowQueue:
    """Bounded FIFO between capture and inference.

    With drop_oldest, a put on a full queue evicts the oldest window and counts it;
    otherwise the put blocks until the consumer makes room.
    """

    def __init__(self, capacity: int, drop_oldest: bool = True) -> None:
        self.capacity = capacity
        self.drop_oldest = drop_oldest
        self.dropped = 0
        self._items: deque = deque()
        self._closed = False
        self._cond = threading.Condition()

    def put(self, item) -> bool:
        """Enqueue; returns True when an older item was dropped to make room.

        Items put after close are discarded.
        """
        with self._cond:
            evicted = False
            if self._closed:
                return evicted
            if self.drop_oldest:
                if len(self._items) >= self.capacity:
                    self._items.popleft()
                    self.dropped += 1
                    evicted = True
            else:
                while len(self._items) >= self.capacity and not self._closed:
                    self._cond.wait()
                if self._closed:
                    return evicted
            self._items.append(item)
            self._cond.notify_all()
            return evicted

    def get(self):
        """Next item, or None once the queue is closed and drained."""
        with self._cond:
            while not self._items and not self._closed:
                self._cond.wait()
            if not self._items:
                return None
            item = self._items.popleft()
            self._cond.notify_all()
            return item

    @property
    def closed(self) -> bool:
        with self._cond:
            return self._closed

    def close(self) -> None:
        with self._cond:
            self._closed = True
            self._cond.notify_all()


@dataclass
class StreamEvent:
    window_start_s: float
    window_end_s: float
    predicted_class: str
    probabilities: List[float]
    compute_latency_ms: float
    dropped_windows_so_far: int

    def to_json(self) -> dict:
        return asdict(self)


class EventSink(ABC):
    @abstractmethod
    def write(self, event: StreamEvent) -> None:
        """Consume one event."""


class ListSink(EventSink):
    def __init__(self) -> None:
        self.events: List[StreamEvent] = []

    def write(self, event: StreamEvent) -> None:
        self.events.append(event)


class JsonLinesSink(EventSink):
    """One JSON object per line, flushed per event."""

    def __init__(self, stream: Optional[TextIO] = None) -> None:
        self.stream = stream if stream is not None else sys.stdout

    def write(self, event: StreamEvent) -> None:
        self.stream.write(json.dumps(event.to_json()) + "\n")
        self.stream.flush()


def latency_stats(latencies_ms: Sequence[float]) -> Dict[str, float]:
    """Mean, nearest-rank p95 and max of per-event latencies."""
    values = np.asarray(list(latencies_ms), dtype=np.float64)
    if values.size == 0:
        raise EmptyEvents("latency statistics need at least one event")
    return {
        "mean_ms": float(values.mean()),
        "p95_ms": float(np.percentile(values, 95, method="inverted_cdf")),
        "max_ms": float(values.max()),
    }


@dataclass
class StreamSummary:
    windows_offered: int
    windows_emitted: int
    windows_dropped: int
    latency: Optional[Dict[str, float]] = None
    presence: Dict[str, dict] = field(default_factory=dict)

    def to_json(self) -> dict:
        return asdict(self)


def presence_table(events: Sequence[StreamEvent], threshold: float) -> Dict[str, dict]:
    """Per species: windows detected with top probability >= threshold, first and last start time."""
    table: Dict[str, dict] = {}
    for event in events:
        if max(event.probabilities) < threshold:
            continue
        row = table.setdefault(
            event.predicted_class, {"windows": 0, "first_s": event.window_start_s, "last_s": event.window_start_s}
        )
        row["windows"] += 1
        row["last_s"] = event.window_start_s
    return table


def classify_stream(
    source: AudioSource,
    model: Classifier,
    config: StreamConfig,
    sink: EventSink,
    featurizer: Featurizer,
    class_names: Optional[Sequence[str]] = None,
    clock: Callable[[], float] = time.perf_counter,
) -> StreamSummary:
    """Capture thread fills a bounded queue; this thread featurizes, classifies and emits.

    Latency runs from the moment a window is complete to the moment its event is emitted.
    """
    rate = featurizer.params.sample_rate_hz
    if source.sample_rate_hz != rate:
        raise RateMismatch(f"source rate {source.sample_rate_hz} Hz != model rate {rate} Hz")
    names = list(class_names) if class_names is not None else [str(i) for i in range(model.n_classes)]
    queue = WindowQueue(config.queue_capacity, drop_oldest=source.live)
    offered = 0
    failure: List[BaseException] = []

    def _capture() -> None:
        nonlocal offered
        try:
            for window in stream_windows(source, config, rate):
                if queue.closed:
                    break
                window.ready_at = clock()
                offered += 1
                if queue.put(window):
                    logger.warning("window_dropped", dropped=queue.dropped)
        except BaseException as e:  # surfaced on the consumer thread
            failure.append(e)
        finally:
            queue.close()

    producer = threading.Thread(target=_capture, name="chorus-capture", daemon=True)
    producer.start()

    events: List[StreamEvent] = []
    consumer_failed = True
    try:
        while True:
            window: Optional[Window] = queue.get()
            if window is None:
                break
            features = featurizer(window.clip)
            probs = model.predict_proba(features[None, None, :, :])[0]
            top = int(np.argmax(probs))
            event = StreamEvent(
                window_start_s=window.start_s,
                window_end_s=window.end_s,
                predicted_class=names[top],
                probabilities=[float(p) for p in probs],
                compute_latency_ms=max(0.0, (clock() - window.ready_at) * 1000.0),
                dropped_windows_so_far=queue.dropped,
            )
            sink.write(event)
            events.append(event)
        consumer_failed = False
    finally:
        queue.close()
        # a live source may be blocked in read; do not wait on it past a failure
        producer.join(timeout=CAPTURE_JOIN_TIMEOUT_S if consumer_failed else None)
    if failure:
        raise failure[0]

    summary = StreamSummary(
        windows_offered=offered,
        windows_emitted=len(events),
        windows_dropped=queue.dropped,
        latency=latency_stats([e.compute_latency_ms for e in events]) if events else None,
        presence=presence_table(events, config.presence_threshold),
    )
    logger.info(
        "stream_complete",
        offered=summary.windows_offered,
        emitted=summary.windows_emitted,
        dropped=summary.windows_dropped,
    )
    return summary
