"""Exception types shared across the toolkit.

Plain ``ValueError`` is used for malformed arguments (wrong shapes,
out-of-range scalars); the classes here mark domain conditions a caller
may want to handle separately.
"""


class TimbrelabError(Exception):
    """Base class for all toolkit-specific errors."""


class EmptyCorpusError(TimbrelabError):
    """Audio too short to yield a single frame, or a build produced no frames."""


class InvalidFrameError(TimbrelabError):
    """A spectral frame violates its contract (negative, non-finite, wrong length)."""


class ClipReadError(TimbrelabError):
    """A source clip could not be read or decoded; message carries the path."""


class CorpusFormatError(TimbrelabError):
    """Corpus file is truncated, corrupt, or has an unsupported version."""


class ModelFormatError(TimbrelabError):
    """Model file is truncated, corrupt, or inconsistent with its header."""


class ConfigError(TimbrelabError):
    """Invalid model/training configuration, or corpus and model disagree."""


class UnsupportedModelError(TimbrelabError):
    """Operation requires a model capability this model lacks (e.g. chroma skip)."""


class TrainingDiverged(TimbrelabError):
    """Loss became non-finite during training."""


class StreamStartupError(TimbrelabError):
    """Audio output could not be opened."""
