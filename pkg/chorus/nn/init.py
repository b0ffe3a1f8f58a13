from __future__ import annotations

from typing import Sequence

import numpy as np


def fan_in(shape: Sequence[int]) -> int:
    """Inputs feeding one output unit: product of every dim after the first."""
    return int(np.prod(shape[1:])) if len(shape) > 1 else int(shape[0])


def he_init(shape: Sequence[int], seed: int, dtype=np.float32) -> np.ndarray:
    """Normal(0, sqrt(2 / fan_in)) samples, deterministic per seed."""
    rng = np.random.default_rng(seed)
    std = np.sqrt(2.0 / max(1, fan_in(shape)))
    return rng.normal(0.0, std, size=tuple(shape)).astype(dtype)
