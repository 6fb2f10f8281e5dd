"""
Exception hierarchy for intonation-vc.

Every failure raised by the library derives from IntonationVCError. Errors that
describe an invalid argument also derive from ValueError so that callers which
only know about the builtin exception keep working.
"""
from pathlib import Path
from typing import Optional, Union


class IntonationVCError(Exception):
    """Base class for all library errors."""


class ShapeMismatchError(IntonationVCError, ValueError):
    """Operand shapes, frame counts or widths disagree."""


class SignalTooShortError(IntonationVCError, ValueError):
    """A waveform has fewer samples than one analysis frame."""


class InvalidFrequencyRangeError(IntonationVCError, ValueError):
    """A frequency band is empty or exceeds the Nyquist frequency."""


class NegativeMagnitudeError(IntonationVCError, ValueError):
    """A magnitude spectrogram contains negative entries."""


class NonScalarLossError(IntonationVCError, ValueError):
    """Gradients were requested for a loss node that is not a scalar."""


class ParameterKeyMismatchError(IntonationVCError, ValueError):
    """Parameter and gradient maps do not share the same names."""


class NotADistributionError(IntonationVCError, ValueError):
    """Predictions are not probability rows, or targets are not one-hot."""


class AlphaOutOfRangeError(IntonationVCError, ValueError):
    """An interpolation weight lies outside [0, 1]."""


class CorpusError(IntonationVCError):
    """Base class for corpus generation and ingestion failures."""


class EmptyCorpusError(CorpusError, ValueError):
    """No utterances were found or supplied."""


class MissingPairError(CorpusError):
    """A WAV file has no label file with the same stem (or vice versa)."""


class AudioFormatError(CorpusError, ValueError):
    """A WAV file is not 16-bit PCM mono."""


class LabelFormatError(CorpusError, ValueError):
    """A label file line is malformed, unsorted or overlapping."""

    def __init__(self, message: str, path: Optional[Union[str, Path]] = None, line: Optional[int] = None):
        self.path = str(path) if path is not None else None
        self.line = line
        location = ""
        if self.path is not None:
            location = f"{self.path}:{line}: " if line is not None else f"{self.path}: "
        super().__init__(f"{location}{message}")


class UnknownPhonemeError(LabelFormatError):
    """A label names a phoneme that is not in the inventory."""


class ModelStateError(IntonationVCError):
    """A model is in the wrong lifecycle state for the requested operation."""


class UntrainedModelError(ModelStateError):
    """A model that has not been trained was used for conversion."""


class ClassifierNotFrozenError(ModelStateError):
    """Synthesizer training was started with a classifier that is not frozen."""


class CheckpointError(IntonationVCError):
    """Base class for checkpoint persistence failures."""


class BadMagicError(CheckpointError):
    """The file does not start with the checkpoint magic bytes."""


class UnsupportedVersionError(CheckpointError):
    """The checkpoint format version is not understood by this release."""


class TruncatedCheckpointError(CheckpointError):
    """The checkpoint ended in the middle of a record."""


class UnknownModelKindError(CheckpointError, ValueError):
    """The checkpoint kind tag is not registered."""
