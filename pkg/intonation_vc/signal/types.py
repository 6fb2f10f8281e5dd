"""Audio and spectrogram containers."""
from dataclasses import dataclass, field

import numpy as np

from intonation_vc.errors import NegativeMagnitudeError, ShapeMismatchError


def _readonly(array: np.ndarray, dtype=np.float64) -> np.ndarray:
    out = np.array(array, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Waveform:
    """Mono audio samples in [-1, 1] with their sample rate."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self) -> None:
        samples = _readonly(np.ravel(self.samples))
        if self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        if not np.all(np.isfinite(samples)):
            raise ValueError("Waveform contains non-finite samples")
        if samples.size and np.max(np.abs(samples)) > 1.0 + 1e-9:
            raise ValueError("Waveform samples must lie in [-1, 1]; normalize first")
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return int(self.samples.size)

    @property
    def duration(self) -> float:
        return len(self) / self.sample_rate

    @classmethod
    def normalized(cls, samples: np.ndarray, sample_rate: int, peak: float = 1.0) -> "Waveform":
        """Scale samples so the absolute peak equals ``peak`` (silence stays silent)."""
        samples = np.asarray(samples, dtype=np.float64)
        top = float(np.max(np.abs(samples))) if samples.size else 0.0
        if top > 0:
            samples = samples * (peak / top)
        return cls(samples, sample_rate)


@dataclass(frozen=True)
class LinSpectrogram:
    """Linear-frequency magnitude spectrogram, frames x (n_fft/2 + 1) bins."""

    mags: np.ndarray
    frame_len: int
    hop: int
    n_fft: int
    sample_rate: int

    def __post_init__(self) -> None:
        mags = _readonly(np.atleast_2d(self.mags))
        if mags.shape[1] != self.n_fft // 2 + 1:
            raise ShapeMismatchError(f"Spectrogram has {mags.shape[1]} bins, expected n_fft/2+1 = {self.n_fft // 2 + 1}")
        if not np.all(np.isfinite(mags)):
            raise ValueError("Spectrogram contains non-finite magnitudes")
        if np.any(mags < 0):
            raise NegativeMagnitudeError("Spectrogram magnitudes must be non-negative")
        object.__setattr__(self, "mags", mags)

    @property
    def n_frames(self) -> int:
        return int(self.mags.shape[0])

    @property
    def n_bins(self) -> int:
        return int(self.mags.shape[1])

    def with_mags(self, mags: np.ndarray) -> "LinSpectrogram":
        """Return a spectrogram with the same framing and new magnitudes."""
        return LinSpectrogram(mags, self.frame_len, self.hop, self.n_fft, self.sample_rate)


@dataclass(frozen=True)
class MelSpectrogram:
    """Log-mel spectrogram, frames x n_mels."""

    mels: np.ndarray
    frame_len: int
    hop: int
    n_fft: int
    sample_rate: int

    def __post_init__(self) -> None:
        mels = _readonly(np.atleast_2d(self.mels))
        if mels.shape[1] < 1:
            raise ValueError("Mel spectrogram needs at least one channel")
        if not np.all(np.isfinite(mels)):
            raise ValueError("Mel spectrogram contains non-finite values")
        object.__setattr__(self, "mels", mels)

    @property
    def n_frames(self) -> int:
        return int(self.mels.shape[0])

    @property
    def n_mels(self) -> int:
        return int(self.mels.shape[1])


@dataclass(frozen=True)
class MelFilterbank:
    """Triangular mel filters, n_mels x bins."""

    weights: np.ndarray
    fmin: float
    fmax: float
    sample_rate: int = field(default=16000)

    def __post_init__(self) -> None:
        weights = _readonly(np.atleast_2d(self.weights))
        if np.any(weights < 0):
            raise ValueError("Filterbank weights must be non-negative")
        if np.any(weights.max(axis=1) <= 0):
            raise ValueError("Every mel filter needs at least one positive weight")
        peaks = np.argmax(weights, axis=1)
        if np.any(np.diff(peaks) <= 0):
            raise ValueError("Mel filter peaks must increase strictly with the channel index")
        object.__setattr__(self, "weights", weights)

    @property
    def n_mels(self) -> int:
        return int(self.weights.shape[0])

    @property
    def n_bins(self) -> int:
        return int(self.weights.shape[1])
