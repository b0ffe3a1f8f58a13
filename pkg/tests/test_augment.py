import numpy as np
import pytest

from chorus.augment import AugmentConfig, AugmentProbabilities, NoisePool, augment_policy
from chorus.augment.noise import pink_noise
from chorus.augment.transforms import fit_noise, mix_noise, pitch_shift, time_stretch
from chorus.core.errors import RateMismatch, RateOutOfRange, SemitonesOutOfRange, SilentNoise, SilentSignal
from chorus.core.types import AudioClip


def _dominant_hz(clip: AudioClip) -> float:
    spectrum = np.abs(np.fft.rfft(clip.samples * np.hanning(len(clip))))
    return float(np.argmax(spectrum) * clip.sample_rate_hz / len(clip))


@pytest.mark.parametrize("rate", [0.5, 0.8, 1.25, 2.0])
def test_time_stretch_length(make_sine, rate):
    clip = make_sine(500.0, seconds=1.0, rate=16000)
    out = time_stretch(clip, rate)
    assert abs(len(out) - round(len(clip) / rate)) <= 1
    assert np.max(np.abs(out.samples)) <= 1.0


def test_time_stretch_identity_and_range(make_sine):
    clip = make_sine(rate=8000)
    assert np.array_equal(time_stretch(clip, 1.0).samples, clip.samples)
    with pytest.raises(RateOutOfRange):
        time_stretch(clip, 2.5)
    with pytest.raises(RateOutOfRange):
        time_stretch(clip, 0.4)


def test_time_stretch_keeps_pitch(make_sine):
    clip = make_sine(1000.0, seconds=1.0, rate=16000)
    assert _dominant_hz(time_stretch(clip, 0.8)) == pytest.approx(1000.0, rel=0.03)


def test_pitch_shift_moves_the_tone_and_keeps_length(make_sine):
    clip = make_sine(1000.0, seconds=1.0, rate=16000)
    out = pitch_shift(clip, 5.0)
    assert len(out) == len(clip)
    assert _dominant_hz(out) == pytest.approx(1000.0 * 2 ** (5 / 12), rel=0.03)
    with pytest.raises(SemitonesOutOfRange):
        pitch_shift(clip, 13.0)


def test_mix_noise_hits_requested_snr(make_sine):
    signal = make_sine(700.0, seconds=1.0, rate=16000, amplitude=0.1)
    noise = AudioClip(0.2 * pink_noise(4000, np.random.default_rng(1)), 16000)
    out = mix_noise(signal, noise, snr_db=20.0, offset=123)
    added = out.samples - signal.samples
    measured = 10 * np.log10(signal.power / np.mean(added**2))
    assert measured == pytest.approx(20.0, abs=0.01)


def test_mix_noise_errors(make_sine):
    signal = make_sine(rate=16000)
    noise = AudioClip(np.ones(100) * 0.1, 16000)
    with pytest.raises(SilentSignal):
        mix_noise(AudioClip(np.zeros(100), 16000), noise, 10.0)
    with pytest.raises(SilentNoise):
        mix_noise(signal, AudioClip(np.zeros(100), 16000), 10.0)
    with pytest.raises(RateMismatch):
        mix_noise(signal, AudioClip(np.ones(100) * 0.1, 8000), 10.0)


def test_fit_noise_tiles_short_noise():
    out = fit_noise(np.array([1.0, 2.0, 3.0]), 7, offset=1)
    assert out.tolist() == [2.0, 3.0, 1.0, 2.0, 3.0, 1.0, 2.0]


def test_pink_noise_pool():
    pool = NoisePool.pink(8000, seed=3)
    assert len(pool) == 4
    assert pool.sample_rate_hz == 8000
    assert all(c.power > 0 for c in pool.clips)
    assert np.max(np.abs(pool[0].samples)) == pytest.approx(0.5)


def test_noise_pool_from_directory(tmp_path):
    from chorus.audio import write_wav

    write_wav(AudioClip(0.3 * pink_noise(800, np.random.default_rng(0)), 8000), tmp_path / "a.wav")
    write_wav(AudioClip(np.zeros(800), 8000), tmp_path / "silent.wav")
    pool = NoisePool.from_directory(tmp_path, 8000)
    assert len(pool) == 1
    with pytest.raises(RateMismatch):
        NoisePool.from_directory(tmp_path, 16000)


def test_policy_is_deterministic_per_seed(make_sine):
    clip = make_sine(800.0, seconds=1.0, rate=8000, amplitude=0.3)
    config = AugmentConfig(apply_probabilities=AugmentProbabilities(stretch=1.0, pitch=1.0, noise=1.0))
    pool = NoisePool.pink(8000)
    a = augment_policy(clip, config, seed=11, noise_pool=pool)
    b = augment_policy(clip, config, seed=11, noise_pool=pool)
    c = augment_policy(clip, config, seed=12, noise_pool=pool)
    assert np.array_equal(a.samples, b.samples)
    assert len(a) != len(c) or not np.array_equal(a.samples, c.samples)


def test_policy_with_zero_probabilities_is_identity(make_sine):
    clip = make_sine(rate=8000)
    out = augment_policy(clip, AugmentConfig.disabled(), seed=5)
    assert np.array_equal(out.samples, clip.samples)


def test_config_rejects_unordered_ranges():
    with pytest.raises(ValueError):
        AugmentConfig(stretch_range=(1.2, 0.9))
    with pytest.raises(ValueError):
        AugmentConfig(snr_range_db=(-20.0, 10.0))


def test_policy_propagates_silent_signal_when_noise_applies():
    silent = AudioClip(np.zeros(8000), 8000)
    config = AugmentConfig(apply_probabilities=AugmentProbabilities(stretch=0.0, pitch=0.0, noise=1.0))
    with pytest.raises(SilentSignal):
        augment_policy(silent, config, seed=0, noise_pool=NoisePool.pink(8000))
