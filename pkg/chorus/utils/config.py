from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Optional

try:
    # Load .env if present
    from dotenv import load_dotenv  # type: ignore

    load_dotenv()  # safe if file missing
except Exception:
    # dotenv is optional at runtime; continue without raising
    pass


def get_env(name: str, default: Optional[str] = None) -> Optional[str]:
    value = os.getenv(name)
    return value if value is not None else default


@dataclass
class RuntimeSettings:
    log_level: str = "INFO"  # DEBUG | INFO | WARNING | ERROR
    threads: int = 1


def load_settings() -> RuntimeSettings:
    threads = get_env("CHORUS_THREADS", "1") or "1"
    try:
        n_threads = max(1, int(threads))
    except ValueError:
        n_threads = 1
    return RuntimeSettings(
        log_level=(get_env("CHORUS_LOG", "INFO") or "INFO").upper(),
        threads=n_threads,
    )
