"""Binary checkpoint format.

Layout (little-endian):
    b"CHKP" | version u16 | header length u32 | header JSON
    | tensor count u32
    | per tensor, in sorted name order: name length u16, name utf-8,
      ndim u8, dims u32 * ndim, float32 data
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Dict, Tuple, Union

import numpy as np

from chorus.core.errors import BadMagic, IoFailure, ShapeMismatch, VersionMismatch
from chorus.nn.model import Network, NetworkConfig
from chorus.utils.logger import get_logger

MAGIC = b"CHKP"
VERSION = 1

logger = get_logger(__name__)


def write_checkpoint_file(path: Union[str, Path], header: dict, tensors: Dict[str, np.ndarray]) -> None:
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    parts = [MAGIC, struct.pack("<HI", VERSION, len(blob)), blob, struct.pack("<I", len(tensors))]
    for name in sorted(tensors):
        data = np.ascontiguousarray(tensors[name], dtype="<f4")
        encoded = name.encode("utf-8")
        parts.append(struct.pack("<H", len(encoded)) + encoded)
        parts.append(struct.pack(f"<B{data.ndim}I", data.ndim, *data.shape))
        parts.append(data.tobytes())
    p = Path(path)
    try:
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_bytes(b"".join(parts))
    except OSError as e:
        raise IoFailure(f"could not write checkpoint {p}: {e}") from e


def read_checkpoint_file(path: Union[str, Path]) -> Tuple[dict, Dict[str, np.ndarray]]:
    p = Path(path)
    try:
        raw = p.read_bytes()
    except OSError as e:
        raise IoFailure(f"could not read checkpoint {p}: {e}") from e
    if raw[:4] != MAGIC:
        raise BadMagic(f"{p} is not a checkpoint (magic {raw[:4]!r})")
    try:
        version, length = struct.unpack_from("<HI", raw, 4)
        if version != VERSION:
            raise VersionMismatch(f"{p}: checkpoint version {version}, expected {VERSION}")
        offset = 4 + struct.calcsize("<HI")
        header = json.loads(raw[offset : offset + length].decode("utf-8"))
        offset += length
        (count,) = struct.unpack_from("<I", raw, offset)
        offset += 4
        tensors: Dict[str, np.ndarray] = {}
        for _ in range(count):
            (name_len,) = struct.unpack_from("<H", raw, offset)
            offset += 2
            name = raw[offset : offset + name_len].decode("utf-8")
            offset += name_len
            (ndim,) = struct.unpack_from("<B", raw, offset)
            offset += 1
            shape = struct.unpack_from(f"<{ndim}I", raw, offset)
            offset += 4 * ndim
            size = int(np.prod(shape)) if ndim else 1
            if offset + 4 * size > len(raw):
                raise ShapeMismatch(f"{p}: tensor {name} {shape} runs past end of file")
            tensors[name] = np.frombuffer(raw, dtype="<f4", count=size, offset=offset).reshape(shape).copy()
            offset += 4 * size
    except struct.error as e:
        raise ShapeMismatch(f"{p}: truncated checkpoint ({e})") from e
    return header, tensors


def save_checkpoint(net: Network, path: Union[str, Path]) -> None:
    header = {"network": net.config.model_dump(), "metadata": net.metadata}
    write_checkpoint_file(path, header, net.state_dict())
    logger.debug("checkpoint_saved", path=str(path))


def load_checkpoint(path: Union[str, Path]) -> Network:
    """Rebuild the network; tensor shapes must match those its config declares."""
    header, tensors = read_checkpoint_file(path)
    net = Network(NetworkConfig(**header["network"]), dtype=np.float32, metadata=header.get("metadata"))
    net.load_state_dict(tensors)
    net.set_mode("infer")
    return net
