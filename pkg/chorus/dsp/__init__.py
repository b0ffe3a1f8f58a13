from .cache import load_cached, load_spectrogram, save_spectrogram
from .features import (
    CorpusStats,
    FeatureConfig,
    Featurizer,
    MelParams,
    MelSpectrogram,
    build_mel_filterbank,
    hz_to_mel,
    log_mel_spectrogram,
    mel_center_frequencies,
    stft_magnitude,
    zscore_normalize,
)

__all__ = [
    "CorpusStats",
    "FeatureConfig",
    "Featurizer",
    "MelParams",
    "MelSpectrogram",
    "build_mel_filterbank",
    "hz_to_mel",
    "load_cached",
    "load_spectrogram",
    "log_mel_spectrogram",
    "mel_center_frequencies",
    "save_spectrogram",
    "stft_magnitude",
    "zscore_normalize",
]
