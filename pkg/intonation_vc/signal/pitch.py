"""Autocorrelation pitch tracking."""
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from scipy.signal import correlate

from intonation_vc.errors import InvalidFrequencyRangeError

from .spectral import num_frames
from .types import Waveform


@dataclass(frozen=True)
class F0Contour:
    """Per-frame fundamental frequency with a voicing mask (f0 is 0 where unvoiced)."""

    f0: np.ndarray
    voiced: np.ndarray
    hop: int
    sample_rate: int

    def __len__(self) -> int:
        return int(self.f0.size)

    @property
    def voiced_f0(self) -> np.ndarray:
        return self.f0[self.voiced]

    def as_list(self) -> List[Optional[float]]:
        """Hz per frame, None for unvoiced frames."""
        return [float(f) if v else None for f, v in zip(self.f0, self.voiced)]

    def log_stats(self) -> Tuple[float, float]:
        """Mean and standard deviation of log-f0 over voiced frames (nan if none)."""
        if not np.any(self.voiced):
            return float("nan"), float("nan")
        log_f0 = np.log(self.voiced_f0)
        return float(log_f0.mean()), float(log_f0.std())


def _parabolic_offset(left: float, centre: float, right: float) -> float:
    curvature = left - 2.0 * centre + right
    if curvature >= 0:
        return 0.0
    return float(np.clip(0.5 * (left - right) / curvature, -0.5, 0.5))


def estimate_f0(
    w: Waveform,
    frame_len: int,
    hop: int,
    fmin: float = 60.0,
    fmax: float = 400.0,
    threshold: float = 0.3,
) -> F0Contour:
    """
    Estimate f0 per analysis frame from the normalized autocorrelation.

    The strongest autocorrelation peak with lag in [sr/fmax, sr/fmin] is refined
    by parabolic interpolation; frames whose normalized peak is below
    ``threshold`` (or that are silent) are marked unvoiced.
    """
    sr = w.sample_rate
    if not 0 < fmin < fmax < sr / 2:
        raise InvalidFrequencyRangeError(f"Need 0 < fmin < fmax < sample_rate/2, got fmin={fmin}, fmax={fmax}")

    count = num_frames(len(w), frame_len, hop)
    f0 = np.zeros(count)
    voiced = np.zeros(count, dtype=bool)
    lag_lo = max(1, int(np.floor(sr / fmax)))
    lag_hi = min(frame_len - 2, int(np.ceil(sr / fmin)))

    for t in range(count):
        frame = w.samples[t * hop:t * hop + frame_len]
        frame = frame - frame.mean()
        energy = float(np.dot(frame, frame))
        if energy <= 1e-12 or lag_hi <= lag_lo:
            continue
        acf = correlate(frame, frame, mode="full", method="fft")[frame_len - 1:] / energy
        peak = lag_lo + int(np.argmax(acf[lag_lo:lag_hi + 1]))
        if acf[peak] < threshold or acf[peak] < acf[peak - 1] or acf[peak] < acf[peak + 1]:
            continue
        lag = peak + _parabolic_offset(acf[peak - 1], acf[peak], acf[peak + 1])
        f0[t] = sr / lag
        voiced[t] = True
    return F0Contour(f0, voiced, hop, sr)
