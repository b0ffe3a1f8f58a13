from .classifier import Classifier
from .errors import ChorusError
from .types import AudioClip

__all__ = ["AudioClip", "ChorusError", "Classifier"]
