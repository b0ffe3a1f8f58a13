from .resample import resample, resample_ratio
from .wav import read_wav, write_wav

__all__ = ["read_wav", "write_wav", "resample", "resample_ratio"]
