"""Exception hierarchy shared by every chorus module.

Each error carries a stable ``code`` so the CLI can print a one-line,
machine-parsable failure record.
"""

from __future__ import annotations


class ChorusError(Exception):
    code = "ChorusError"


# audio
class InvalidClip(ChorusError, ValueError):
    code = "InvalidClip"


class AudioFileNotFound(ChorusError, FileNotFoundError):
    code = "NotFound"


class MalformedHeader(ChorusError, ValueError):
    code = "MalformedHeader"


class UnsupportedFormat(ChorusError, ValueError):
    code = "UnsupportedFormat"


class IoFailure(ChorusError, OSError):
    code = "IoFailure"


class RateMismatch(ChorusError, ValueError):
    code = "RateMismatch"


# dsp
class TooShort(ChorusError, ValueError):
    code = "TooShort"


class InvalidParams(ChorusError, ValueError):
    code = "InvalidParams"


class CacheFormatError(ChorusError, ValueError):
    code = "CacheFormatError"


# augment
class RateOutOfRange(ChorusError, ValueError):
    code = "RateOutOfRange"


class SemitonesOutOfRange(ChorusError, ValueError):
    code = "OutOfRange"


class SilentSignal(ChorusError, ValueError):
    code = "SilentSignal"


class SilentNoise(ChorusError, ValueError):
    code = "SilentNoise"


# nn
class ShapeMismatch(ChorusError, ValueError):
    code = "ShapeMismatch"


class ModeMisuse(ChorusError, RuntimeError):
    code = "ModeMisuse"


class LabelOutOfRange(ChorusError, ValueError):
    code = "LabelOutOfRange"


class TooFewFrames(ChorusError, ValueError):
    code = "TooFewFrames"


# training
class NonFiniteLoss(ChorusError, ArithmeticError):
    code = "NonFiniteLoss"


class ClassTooSmall(ChorusError, ValueError):
    code = "ClassTooSmall"


class EmptyGrid(ChorusError, ValueError):
    code = "EmptyGrid"


class BadMagic(ChorusError, ValueError):
    code = "BadMagic"


class VersionMismatch(ChorusError, ValueError):
    code = "VersionMismatch"


class ManifestError(ChorusError, ValueError):
    code = "ManifestError"


# evaluation
class LengthMismatch(ChorusError, ValueError):
    code = "LengthMismatch"


class TooFewSamples(ChorusError, ValueError):
    code = "TooFewSamples"


class EmptyMatrix(ChorusError, ValueError):
    code = "EmptyMatrix"


# streaming
class EmptyEvents(ChorusError, ValueError):
    code = "Empty"
