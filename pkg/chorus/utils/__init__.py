# Utilities package for chorus

from .logger import get_logger
from .config import RuntimeSettings, load_settings, get_env
from .seeds import derive_seed

__all__ = [
    "get_logger",
    "RuntimeSettings",
    "load_settings",
    "get_env",
    "derive_seed",
]
