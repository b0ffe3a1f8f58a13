"""chorus acoustic species classification package.

This package provides audio I/O, log-mel featurization, augmentation,
synthetic soundscapes, a compact MBConv classifier trained from scratch,
evaluation statistics, and sliding-window stream classification.
"""

VERSION = "0.1.0"

__all__ = [
    "VERSION",
]
