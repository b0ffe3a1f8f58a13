import io
import json
import threading

import numpy as np
import pytest
from pydantic import ValidationError

from chorus.audio import write_wav
from chorus.core.errors import EmptyEvents, InvalidParams, RateMismatch
from chorus.core.types import AudioClip
from chorus.dsp.features import Featurizer, MelParams
from chorus.nn import Network, NetworkConfig
from chorus.streaming import (
    ArraySource,
    AudioSource,
    FileReplaySource,
    JsonLinesSink,
    ListSink,
    StdinPcmSource,
    StreamConfig,
    StreamEvent,
    WindowQueue,
    classify_stream,
    create_source,
    latency_stats,
    presence_table,
    stream_windows,
)

RATE = 100


def _windows(seconds: float, **config):
    source = ArraySource(np.ones(int(seconds * RATE)) * 0.1, RATE, chunk_s=0.3)
    return list(stream_windows(source, StreamConfig(**config), RATE))


def test_ten_seconds_gives_three_full_windows():
    windows = _windows(10.0)
    assert [w.start_s for w in windows] == [0.0, 2.5, 5.0]
    assert not any(w.padded for w in windows)
    assert all(len(w.clip) == 5 * RATE for w in windows)


def test_eleven_seconds_adds_a_padded_tail():
    windows = _windows(11.0)
    assert [w.start_s for w in windows] == [0.0, 2.5, 5.0, 7.5]
    tail = windows[-1]
    assert tail.padded
    assert tail.n_valid == 350
    assert tail.end_s == pytest.approx(11.0)
    assert np.all(tail.clip.samples[350:] == 0.0)


def test_short_streams():
    assert _windows(2.0) == []
    assert len(_windows(3.0)) == 1
    assert _windows(3.0)[0].padded
    assert _windows(3.0, min_fill_ratio=0.8) == []


def test_window_rate_mismatch():
    with pytest.raises(RateMismatch):
        list(stream_windows(ArraySource(np.zeros(10), 200), StreamConfig(), RATE))


def test_stream_config_validation():
    with pytest.raises(ValidationError):
        StreamConfig(window_s=1.0, hop_s=2.0)
    with pytest.raises(ValidationError):
        StreamConfig(min_fill_ratio=0.0)


def test_latency_stats():
    stats = latency_stats([10.0 * i for i in range(1, 11)])
    assert stats == {"mean_ms": 55.0, "p95_ms": 100.0, "max_ms": 100.0}
    assert latency_stats([7.0])["p95_ms"] == 7.0
    with pytest.raises(EmptyEvents):
        latency_stats([])


def test_drop_oldest_queue_counts_exactly():
    queue = WindowQueue(capacity=2, drop_oldest=True)
    evicted = [queue.put(i) for i in range(5)]
    assert evicted == [False, False, True, True, True]
    assert queue.dropped == 3
    queue.close()
    assert [queue.get(), queue.get(), queue.get()] == [3, 4, None]


def test_blocking_queue_loses_nothing():
    queue = WindowQueue(capacity=1, drop_oldest=False)
    received = []

    def consume():
        while (item := queue.get()) is not None:
            received.append(item)

    consumer = threading.Thread(target=consume)
    consumer.start()
    for i in range(50):
        queue.put(i)
    queue.close()
    consumer.join(timeout=10)
    assert received == list(range(50))
    assert queue.dropped == 0


def test_stdin_source_decodes_pcm():
    samples = np.array([0, 16384, -16384, 32767, -32768], dtype="<i2")
    source = StdinPcmSource(RATE, stream=io.BytesIO(samples.tobytes() + b"\x01"), chunk_s=0.02)
    decoded = np.concatenate(list(source.chunks()))
    assert np.allclose(decoded, samples / 32768.0)
    assert source.live is True


def test_file_replay_paces_to_duration(tmp_path):
    path = tmp_path / "clip.wav"
    write_wav(AudioClip(np.zeros(RATE * 2), RATE), path)
    now = [0.0]
    slept = []

    def sleep(seconds):
        slept.append(seconds)
        now[0] += seconds

    source = FileReplaySource(path, chunk_s=0.5, realtime=True, clock=lambda: now[0], sleep=sleep)
    chunks = list(source.chunks())
    assert sum(len(c) for c in chunks) == RATE * 2
    assert len(slept) == 4
    assert sum(slept) == pytest.approx(2.0)
    assert FileReplaySource(path).live is False


def test_create_source(tmp_path):
    with pytest.raises(InvalidParams):
        create_source("-")
    assert isinstance(create_source("-", sample_rate_hz=8000), StdinPcmSource)
    path = tmp_path / "x.wav"
    write_wav(AudioClip(np.zeros(10), 8000), path)
    assert isinstance(create_source(str(path)), FileReplaySource)


def test_presence_table():
    events = [
        StreamEvent(0.0, 5.0, "wren", [0.9, 0.1], 1.0, 0),
        StreamEvent(2.5, 7.5, "owl", [0.4, 0.6], 1.0, 0),
        StreamEvent(5.0, 10.0, "wren", [0.55, 0.45], 1.0, 0),
        StreamEvent(7.5, 12.5, "owl", [0.45, 0.55], 1.0, 0),
    ]
    table = presence_table(events, threshold=0.58)
    assert table == {"wren": {"windows": 1, "first_s": 0.0, "last_s": 0.0}, "owl": {"windows": 1, "first_s": 2.5, "last_s": 2.5}}
    assert presence_table(events, threshold=0.5)["wren"] == {"windows": 2, "first_s": 0.0, "last_s": 5.0}


@pytest.fixture
def stream_setup():
    params = MelParams(sample_rate_hz=8000, n_fft=256, hop=128, n_mels=16, fmin_hz=50.0, fmax_hz=4000.0)
    featurizer = Featurizer(params)
    net = Network(NetworkConfig.micro(n_classes=3, n_mels=16), seed=0).set_mode("infer")
    samples = 0.2 * np.random.default_rng(0).standard_normal(8000 * 10)
    return featurizer, net, samples


def test_batch_replay_equals_offline_classification(stream_setup):
    featurizer, net, samples = stream_setup
    sink = ListSink()
    summary = classify_stream(
        ArraySource(samples, 8000), net, StreamConfig(), sink, featurizer, class_names=["a", "b", "c"]
    )
    assert summary.windows_offered == summary.windows_emitted == 3
    assert summary.windows_dropped == 0
    assert summary.latency is not None and summary.latency["max_ms"] >= 0.0
    starts = [e.window_start_s for e in sink.events]
    assert starts == [0.0, 2.5, 5.0]
    for event in sink.events:
        lo = int(event.window_start_s * 8000)
        window = AudioClip(samples[lo : lo + 40000].copy(), 8000)
        expected = net.predict_proba(featurizer(window)[None, None])[0]
        assert np.array_equal(np.asarray(event.probabilities), expected)
        assert sum(event.probabilities) == pytest.approx(1.0, abs=1e-5)
        assert event.predicted_class == ["a", "b", "c"][int(np.argmax(expected))]


def test_json_lines_sink(stream_setup):
    featurizer, net, samples = stream_setup
    out = io.StringIO()
    classify_stream(ArraySource(samples[:8000 * 6], 8000), net, StreamConfig(), JsonLinesSink(out), featurizer)
    lines = [json.loads(line) for line in out.getvalue().splitlines()]
    assert [line["window_start_s"] for line in lines] == [0.0, 2.5]
    assert set(lines[0]) == {
        "window_start_s",
        "window_end_s",
        "predicted_class",
        "probabilities",
        "compute_latency_ms",
        "dropped_windows_so_far",
    }


def test_stream_rate_mismatch(stream_setup):
    featurizer, net, _ = stream_setup
    with pytest.raises(RateMismatch):
        classify_stream(ArraySource(np.zeros(100), 16000), net, StreamConfig(), ListSink(), featurizer)


def test_windows_shorter_than_one_sample_are_rejected():
    with pytest.raises(InvalidParams):
        _windows(10.0, window_s=5.0, hop_s=0.001)
    with pytest.raises(InvalidParams):
        _windows(10.0, window_s=0.004, hop_s=0.004)


def test_queue_discards_puts_after_close():
    queue = WindowQueue(capacity=2, drop_oldest=False)
    queue.close()
    assert queue.closed
    assert queue.put("late") is False
    assert queue.get() is None


class _EndlessNoise(AudioSource):
    live = True

    @property
    def sample_rate_hz(self) -> int:
        return 8000

    def chunks(self):
        rng = np.random.default_rng(0)
        while True:
            yield 0.1 * rng.standard_normal(800)


class _BrokenNetwork(Network):
    def predict_proba(self, batch):
        raise RuntimeError("inference failed")


def test_consumer_failure_stops_a_live_capture(stream_setup):
    featurizer, _, _ = stream_setup
    net = _BrokenNetwork(NetworkConfig.micro(n_classes=3, n_mels=16), seed=0).set_mode("infer")
    raised = []

    def _run():
        try:
            classify_stream(_EndlessNoise(), net, StreamConfig(), ListSink(), featurizer)
        except RuntimeError as e:
            raised.append(e)

    worker = threading.Thread(target=_run, daemon=True)
    worker.start()
    worker.join(timeout=10.0)
    assert not worker.is_alive()
    assert [str(e) for e in raised] == ["inference failed"]
