"""On-disk spectrogram cache ("MELS" files).

Layout: magic b"MELS", version u16, JSON length u32, MelParams JSON,
then row-major little-endian float32 data (n_mels rows).
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Optional, Union

import numpy as np

from chorus.core.errors import CacheFormatError, IoFailure
from chorus.utils.logger import get_logger

from .features import MelParams, MelSpectrogram

MAGIC = b"MELS"
VERSION = 1

logger = get_logger(__name__)


def save_spectrogram(spec: MelSpectrogram, path: Union[str, Path]) -> None:
    header = json.dumps(spec.params.model_dump(), sort_keys=True).encode("utf-8")
    p = Path(path)
    try:
        p.parent.mkdir(parents=True, exist_ok=True)
        with p.open("wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<HI", VERSION, len(header)))
            fh.write(header)
            fh.write(np.ascontiguousarray(spec.data, dtype="<f4").tobytes())
    except OSError as e:
        raise IoFailure(f"could not write spectrogram cache {p}: {e}") from e


def load_spectrogram(path: Union[str, Path]) -> MelSpectrogram:
    p = Path(path)
    raw = p.read_bytes()
    if raw[:4] != MAGIC:
        raise CacheFormatError(f"{p}: bad magic")
    version, length = struct.unpack_from("<HI", raw, 4)
    if version != VERSION:
        raise CacheFormatError(f"{p}: unsupported cache version {version}")
    offset = 4 + struct.calcsize("<HI")
    params = MelParams(**json.loads(raw[offset : offset + length].decode("utf-8")))
    values = np.frombuffer(raw, dtype="<f4", offset=offset + length)
    if values.size % params.n_mels:
        raise CacheFormatError(f"{p}: data size {values.size} not divisible by n_mels={params.n_mels}")
    return MelSpectrogram(data=values.reshape(params.n_mels, -1).astype(np.float64), params=params)


def load_cached(path: Union[str, Path], params: MelParams) -> Optional[MelSpectrogram]:
    """Return the cached spectrogram, or None when missing, unreadable or stale."""
    p = Path(path)
    if not p.is_file():
        return None
    try:
        spec = load_spectrogram(p)
    except (CacheFormatError, ValueError, struct.error) as e:
        logger.warning("cache_unreadable", path=str(p), error=str(e))
        return None
    if spec.params != params:
        logger.info("cache_stale", path=str(p))
        return None
    return spec
