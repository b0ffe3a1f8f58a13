import numpy as np
import pytest
from scipy.signal import get_window

from chorus.core.errors import CacheFormatError, InvalidParams, RateMismatch, TooShort
from chorus.core.types import AudioClip
from chorus.dsp.cache import load_cached, load_spectrogram, save_spectrogram
from chorus.dsp.features import (
    CorpusStats,
    Featurizer,
    MelParams,
    MelSpectrogram,
    build_mel_filterbank,
    hz_to_mel,
    log_mel_from_power,
    log_mel_spectrogram,
    mel_center_frequencies,
    stft_magnitude,
    zscore_normalize,
)


def test_mel_scale_anchor():
    assert hz_to_mel(1000.0) == pytest.approx(1000.0, abs=0.05)
    assert hz_to_mel(0.0) == pytest.approx(0.0)


def test_stft_matches_direct_dft():
    rng = np.random.default_rng(3)
    clip = AudioClip(rng.uniform(-0.5, 0.5, 300), 8000)
    n_fft, hop = 64, 32
    got = stft_magnitude(clip, n_fft, hop)

    window = get_window("hann", n_fft)
    n_frames = (300 - n_fft) // hop + 1
    k = np.arange(n_fft // 2 + 1)[:, None]
    n = np.arange(n_fft)[None, :]
    basis = np.exp(-2j * np.pi * k * n / n_fft)
    expected = np.stack(
        [np.abs(basis @ (clip.samples[t * hop : t * hop + n_fft] * window)) for t in range(n_frames)], axis=1
    )
    assert got.shape == (n_fft // 2 + 1, n_frames)
    assert np.allclose(got, expected, rtol=1e-6, atol=1e-9)


def test_log_mel_shape_for_default_params(make_sine):
    spec = log_mel_spectrogram(make_sine(1000.0, seconds=1.0, rate=16000), MelParams())
    assert spec.data.shape == (64, (16000 - 512) // 256 + 1)
    assert np.all(np.isfinite(spec.data))


def test_log_mel_of_silence_is_the_floor():
    params = MelParams()
    spec = log_mel_spectrogram(AudioClip(np.zeros(2048), 16000), params)
    assert np.allclose(spec.data, np.log(params.log_floor))


def test_tone_energy_peaks_in_the_nearest_band(make_sine):
    params = MelParams()
    spec = log_mel_spectrogram(make_sine(2000.0, seconds=0.5, rate=16000), params)
    centers = mel_center_frequencies(params)
    peak_band = int(np.argmax(spec.data.mean(axis=1)))
    assert abs(peak_band - int(np.argmin(np.abs(centers - 2000.0)))) <= 1


def test_short_clip_and_rate_errors():
    with pytest.raises(TooShort):
        log_mel_spectrogram(AudioClip(np.zeros(100), 16000), MelParams())
    with pytest.raises(RateMismatch):
        log_mel_spectrogram(AudioClip(np.zeros(4096), 8000), MelParams())


def test_invalid_params_are_rejected():
    with pytest.raises(InvalidParams):
        build_mel_filterbank(MelParams(sample_rate_hz=8000, fmax_hz=8000.0))
    with pytest.raises(InvalidParams):
        MelParams(n_fft=256, hop=512).check()


def test_filterbank_is_triangular_and_non_negative():
    fb = build_mel_filterbank(MelParams())
    assert fb.shape == (64, 257)
    assert fb.min() >= 0.0
    assert fb.max() <= 1.0 + 1e-9
    assert np.all(fb.sum(axis=1) > 0)


def test_zscore_example():
    spec = MelSpectrogram(np.array([[1.0, 2.0, 3.0]]), MelParams())
    out = zscore_normalize(spec).data
    assert np.allclose(out, [[-1.2247449, 0.0, 1.2247449]], atol=1e-6)


def test_zscore_statistics():
    data = np.random.default_rng(0).normal(4.0, 3.0, size=(64, 100))
    out = zscore_normalize(MelSpectrogram(data, MelParams())).data
    assert abs(out.mean()) < 1e-6
    assert abs(out.std() - 1.0) < 1e-6


def test_corpus_stats_match_numpy():
    rng = np.random.default_rng(1)
    parts = [rng.standard_normal((8, n)) for n in (5, 9, 13)]
    stats = CorpusStats.fit(parts)
    flat = np.concatenate([p.ravel() for p in parts])
    assert stats.mean == pytest.approx(flat.mean())
    assert stats.std == pytest.approx(flat.std())
    with pytest.raises(InvalidParams):
        CorpusStats.fit([])


def test_featurizer_crop_pads_with_silence(toy_featurizer):
    data = np.zeros((8, 10))
    padded = toy_featurizer.crop(data, 16)
    assert padded.shape == (8, 16)
    assert np.all(padded[:, 10:] == np.log(toy_featurizer.params.log_floor))
    assert toy_featurizer.crop(np.arange(40.0).reshape(8, 5), 3, offset=2).shape == (8, 3)


def test_featurizer_description_round_trip():
    featurizer = Featurizer(MelParams(n_mels=32), "corpus", CorpusStats(mean=-3.0, std=2.0))
    again = Featurizer.from_description(featurizer.describe())
    assert again.params == featurizer.params
    assert again.normalization == "corpus"
    assert again.corpus_stats == featurizer.corpus_stats


def test_corpus_normalization_needs_stats():
    with pytest.raises(InvalidParams):
        Featurizer(MelParams(), "corpus")


def test_cache_round_trip_and_staleness(tmp_path, make_sine):
    params = MelParams()
    spec = log_mel_spectrogram(make_sine(rate=16000, seconds=0.5), params)
    path = tmp_path / "a.mels"
    save_spectrogram(spec, path)
    loaded = load_spectrogram(path)
    assert loaded.params == params
    assert np.allclose(loaded.data, spec.data, rtol=1e-6, atol=1e-5)
    assert load_cached(path, params) is not None
    assert load_cached(path, MelParams(n_mels=32)) is None
    assert load_cached(tmp_path / "missing.mels", params) is None


def test_cache_bad_magic(tmp_path):
    path = tmp_path / "bad.mels"
    path.write_bytes(b"NOPE" + bytes(32))
    with pytest.raises(CacheFormatError):
        load_spectrogram(path)
    assert load_cached(path, MelParams()) is None


def test_stft_frame_energy_matches_windowed_signal():
    rng = np.random.default_rng(8)
    clip = AudioClip(rng.uniform(-0.5, 0.5, 16000), 16000)
    n_fft, hop = 512, 256
    power = stft_magnitude(clip, n_fft, hop) ** 2
    # one-sided spectrum: every bin except DC and Nyquist stands for two
    one_sided = power[0] + 2.0 * power[1:-1].sum(axis=0) + power[-1]
    window = get_window("hann", n_fft)
    frames = np.stack([clip.samples[t * hop : t * hop + n_fft] for t in range(power.shape[1])])
    expected = n_fft * np.sum((frames * window) ** 2, axis=1)
    assert np.allclose(one_sided, expected, rtol=1e-9)


def test_doubling_amplitude_adds_ln4_where_signal_dominates():
    params = MelParams()
    noise = 0.1 * np.random.default_rng(2).standard_normal(8000)
    base = log_mel_spectrogram(AudioClip(noise, 16000), params).data
    louder = log_mel_spectrogram(AudioClip(2.0 * noise, 16000), params).data
    dominant = base > np.log(params.log_floor) + 16.0
    assert dominant.mean() > 0.9
    assert np.allclose((louder - base)[dominant], np.log(4.0), atol=1e-6)


def test_log_mel_is_monotone_in_bin_power(toy_mel):

    fb = build_mel_filterbank(toy_mel)
    rng = np.random.default_rng(4)
    power = rng.uniform(0.0, 1.0, (fb.shape[1], 5))
    before = log_mel_from_power(power, fb, toy_mel.log_floor)
    for b in range(fb.shape[1]):
        bumped = power.copy()
        bumped[b] += 0.5
        assert np.all(log_mel_from_power(bumped, fb, toy_mel.log_floor) >= before)


def test_filter_peaks_increase_with_band_index():

    params = MelParams(n_fft=2048, n_mels=32)
    fb = build_mel_filterbank(params)
    peaks = np.argmax(fb, axis=1)
    assert np.all(np.diff(peaks) >= 0)
    assert np.all(np.diff(mel_center_frequencies(params)) > 0)
