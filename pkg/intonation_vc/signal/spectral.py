"""
Framing, short-time Fourier transforms and mel projection.

Frames are taken without centering or padding: a waveform of N samples yields
floor((N - frame_len) / hop) + 1 frames, each Hann-windowed and zero-padded
to n_fft before the real DFT.
"""
from functools import lru_cache
from typing import Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.signal import get_window

from intonation_vc.errors import (
    InvalidFrequencyRangeError,
    NegativeMagnitudeError,
    ShapeMismatchError,
    SignalTooShortError,
)

from .types import LinSpectrogram, MelFilterbank, MelSpectrogram, Waveform

LOG_FLOOR = 1e-6


@lru_cache(maxsize=16)
def analysis_window(frame_len: int) -> np.ndarray:
    """Periodic Hann window of ``frame_len`` samples (read-only, cached)."""
    window = get_window("hann", frame_len, fftbins=True).astype(np.float64)
    window.setflags(write=False)
    return window


def num_frames(n_samples: int, frame_len: int, hop: int) -> int:
    """Number of complete analysis frames in ``n_samples`` samples."""
    if n_samples < frame_len:
        return 0
    return (n_samples - frame_len) // hop + 1


def signal_length(n_frames: int, frame_len: int, hop: int) -> int:
    """Shortest signal length that produces ``n_frames`` frames."""
    return (n_frames - 1) * hop + frame_len if n_frames > 0 else 0


def _check_framing(frame_len: int, hop: int, n_fft: int) -> None:
    if frame_len < 1 or frame_len > n_fft:
        raise ValueError(f"frame_len must be in [1, n_fft={n_fft}], got {frame_len}")
    if hop < 1 or hop > frame_len:
        raise ValueError(f"hop must be in [1, frame_len={frame_len}], got {hop}")


def frame_signal(samples: np.ndarray, frame_len: int, hop: int) -> np.ndarray:
    """Return a (frames, frame_len) view of ``samples``."""
    if samples.size < frame_len:
        raise SignalTooShortError(
            f"Waveform is too short: {samples.size} samples, need at least frame_len={frame_len}"
        )
    return sliding_window_view(samples, frame_len)[::hop]


def stft_complex(samples: np.ndarray, frame_len: int, hop: int, n_fft: int) -> np.ndarray:
    """Complex Hann-windowed STFT, frames x (n_fft/2 + 1)."""
    _check_framing(frame_len, hop, n_fft)
    frames = frame_signal(np.asarray(samples, dtype=np.float64), frame_len, hop)
    return np.fft.rfft(frames * analysis_window(frame_len), n=n_fft, axis=1)


def stft(w: Waveform, frame_len: int, hop: int, n_fft: int) -> LinSpectrogram:
    """
    Magnitude STFT of a waveform.

    :param w: Input waveform (must hold at least one frame)
    :param frame_len: Window length in samples
    :param hop: Frame shift in samples
    :param n_fft: DFT size (>= frame_len)
    :return: Magnitudes, phase discarded
    """
    if len(w) == 0:
        raise SignalTooShortError("Waveform is empty")
    spec = stft_complex(w.samples, frame_len, hop, n_fft)
    return LinSpectrogram(np.abs(spec), frame_len, hop, n_fft, w.sample_rate)


def istft(spec: np.ndarray, frame_len: int, hop: int, n_fft: int, floor_ratio: float = 0.0) -> np.ndarray:
    """
    Least-squares inverse of ``stft_complex``.

    Each frame is inverse-transformed, windowed again and overlap-added; the sum
    is divided by the overlap-added squared window. With ``floor_ratio`` = 0 the
    result is the exact least-squares signal (samples no window covers are 0).
    A positive ratio floors the normalizer at that fraction of its maximum,
    which fades the edges in instead of amplifying them.
    """
    window = analysis_window(frame_len)
    n_frames = spec.shape[0]
    length = signal_length(n_frames, frame_len, hop)
    frames = np.fft.irfft(spec, n=n_fft, axis=1)[:, :frame_len] * window

    numerator = np.zeros(length)
    denominator = np.zeros(length)
    for t in range(n_frames):
        start = t * hop
        numerator[start:start + frame_len] += frames[t]
        denominator[start:start + frame_len] += window ** 2

    if floor_ratio > 0.0:
        denominator = np.maximum(denominator, floor_ratio * denominator.max())
        return numerator / denominator
    out = np.zeros(length)
    covered = denominator > 1e-12
    out[covered] = numerator[covered] / denominator[covered]
    return out


def hz_to_mel(freq):
    """Mel scale: 2595 * log10(1 + f / 700)."""
    return 2595.0 * np.log10(1.0 + np.asarray(freq, dtype=np.float64) / 700.0)


def mel_to_hz(mel):
    """Inverse of ``hz_to_mel``."""
    return 700.0 * (10.0 ** (np.asarray(mel, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(sample_rate: int, n_fft: int, n_mels: int, fmin: float, fmax: float) -> MelFilterbank:
    """
    Triangular filters equally spaced on the mel scale.

    Filter m rises from edge m to a peak of 1 at edge m+1 and falls to zero at
    edge m+2, where the n_mels + 2 edges are uniform in mel between fmin and fmax.
    """
    if not 0 <= fmin < fmax <= sample_rate / 2:
        raise InvalidFrequencyRangeError(
            f"Need 0 <= fmin < fmax <= sample_rate/2, got fmin={fmin}, fmax={fmax}, sample_rate={sample_rate}"
        )
    if n_mels < 1:
        raise ValueError(f"n_mels must be positive, got {n_mels}")

    bin_freqs = np.arange(n_fft // 2 + 1) * sample_rate / n_fft
    edges = mel_to_hz(np.linspace(hz_to_mel(fmin), hz_to_mel(fmax), n_mels + 2))

    weights = np.zeros((n_mels, bin_freqs.size))
    for m in range(n_mels):
        lower, centre, upper = edges[m], edges[m + 1], edges[m + 2]
        rising = (bin_freqs - lower) / (centre - lower)
        falling = (upper - bin_freqs) / (upper - centre)
        weights[m] = np.maximum(0.0, np.minimum(rising, falling))
        if weights[m].max() <= 0:
            # Narrower than one bin: put the whole filter on its nearest bin.
            weights[m, int(np.argmin(np.abs(bin_freqs - centre)))] = 1.0
    return MelFilterbank(weights, float(fmin), float(fmax), sample_rate)


def to_mel_linear(s: LinSpectrogram, fb: MelFilterbank) -> np.ndarray:
    """Mel energies before the log: mags @ weights.T."""
    if fb.n_bins != s.n_bins:
        raise ShapeMismatchError(f"Filterbank has {fb.n_bins} bins but spectrogram has {s.n_bins}")
    return s.mags @ fb.weights.T


def to_mel(s: LinSpectrogram, fb: MelFilterbank, floor: float = LOG_FLOOR) -> MelSpectrogram:
    """Log-mel spectrogram: log(mags @ weights.T + floor)."""
    return MelSpectrogram(np.log(to_mel_linear(s, fb) + floor), s.frame_len, s.hop, s.n_fft, s.sample_rate)


def power_emphasis(s: LinSpectrogram, p: float = 1.2) -> LinSpectrogram:
    """Raise every magnitude to the power ``p``."""
    if p <= 0:
        raise ValueError(f"Exponent must be positive, got {p}")
    if np.any(s.mags < 0):
        raise NegativeMagnitudeError("power_emphasis is defined for magnitudes only")
    return s.with_mags(np.power(s.mags, p))


def spectral_error(estimate: np.ndarray, target: np.ndarray, two_sided: bool = False) -> float:
    """
    Relative spectral error ||estimate - target|| / ||target||.

    With ``two_sided`` the interior bins count twice, which matches the norm of
    the full (Hermitian) spectrum that Griffin-Lim decreases.
    """
    if estimate.shape != target.shape:
        raise ShapeMismatchError(f"Spectral shapes differ: {estimate.shape} vs {target.shape}")
    weights = np.ones(target.shape[-1])
    if two_sided:
        weights[1:-1] = 2.0
    denominator = np.sqrt(np.sum(weights * target ** 2))
    if denominator == 0:
        return 0.0 if not np.any(estimate) else float("inf")
    return float(np.sqrt(np.sum(weights * (estimate - target) ** 2)) / denominator)


def mel_distance(a: MelSpectrogram, b: MelSpectrogram) -> float:
    """Frobenius (L2) distance between two log-mel spectrograms of equal shape."""
    if a.mels.shape != b.mels.shape:
        raise ShapeMismatchError(f"Mel shapes differ: {a.mels.shape} vs {b.mels.shape}")
    return float(np.linalg.norm(a.mels - b.mels))


def analyze(w: Waveform, frame_len: int, hop: int, n_fft: int, fb: Optional[MelFilterbank] = None):
    """Return (LinSpectrogram, MelSpectrogram or None) for a waveform."""
    spec = stft(w, frame_len, hop, n_fft)
    return spec, (to_mel(spec, fb) if fb is not None else None)
