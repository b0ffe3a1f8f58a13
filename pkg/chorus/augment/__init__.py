from .noise import NoisePool, pink_noise, resolve_noise_pool
from .policy import AugmentConfig, AugmentProbabilities, augment_policy
from .transforms import fit_noise, mix_noise, noise_gain, pitch_shift, time_stretch

__all__ = [
    "AugmentConfig",
    "AugmentProbabilities",
    "NoisePool",
    "augment_policy",
    "fit_noise",
    "mix_noise",
    "noise_gain",
    "pink_noise",
    "pitch_shift",
    "resolve_noise_pool",
    "time_stretch",
]
