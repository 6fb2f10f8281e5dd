"""
Phase reconstruction with the Griffin-Lim algorithm.

Starting from a seeded random phase, the estimate alternates between the
least-squares inverse STFT and a forward STFT whose magnitudes are replaced by
the target. The spectral distance of successive estimates never increases.
"""
import logging
from typing import Callable, Optional

import numpy as np

from intonation_vc.seeding import Stream, rng_for

from .spectral import istft, signal_length, spectral_error, stft_complex
from .types import LinSpectrogram, Waveform

logger = logging.getLogger(__name__)

# Fraction of the peak window-square sum below which output edges are faded in.
EDGE_FLOOR = 1e-3


def griffin_lim(
    s: LinSpectrogram,
    n_iters: int = 60,
    seed: int = 0,
    callback: Optional[Callable[[int, float], None]] = None,
) -> Waveform:
    """
    Recover a waveform whose STFT magnitude approximates ``s``.

    :param s: Target magnitudes
    :param n_iters: Number of projection iterations (>= 1)
    :param seed: Seed of the initial random phase
    :param callback: Called as ``callback(iteration, error)`` before each
        projection and once more after the last one; ``error`` is the relative
        two-sided spectral distance of the current estimate
    :return: Peak-normalized waveform of (frames - 1) * hop + frame_len samples
    """
    if n_iters < 1:
        raise ValueError(f"n_iters must be at least 1, got {n_iters}")
    mags = s.mags
    length = signal_length(s.n_frames, s.frame_len, s.hop)
    if not np.any(mags):
        logger.warning("Griffin-Lim input is silent; returning digital silence")
        return Waveform(np.zeros(length), s.sample_rate)

    rng = rng_for(seed, Stream.VOCODER)
    phase = np.exp(2j * np.pi * rng.random(mags.shape))
    estimate = istft(mags * phase, s.frame_len, s.hop, s.n_fft)

    for iteration in range(n_iters):
        rebuilt = stft_complex(estimate, s.frame_len, s.hop, s.n_fft)
        magnitude = np.abs(rebuilt)
        if callback is not None:
            callback(iteration, spectral_error(magnitude, mags, two_sided=True))
        phase = np.where(magnitude > 0, rebuilt / np.where(magnitude > 0, magnitude, 1.0), 1.0)
        estimate = istft(mags * phase, s.frame_len, s.hop, s.n_fft)

    if callback is not None:
        rebuilt = stft_complex(estimate, s.frame_len, s.hop, s.n_fft)
        callback(n_iters, spectral_error(np.abs(rebuilt), mags, two_sided=True))

    output = istft(mags * phase, s.frame_len, s.hop, s.n_fft, floor_ratio=EDGE_FLOOR)
    logger.debug(f"Griffin-Lim finished {n_iters} iterations over {s.n_frames} frames")
    return Waveform.normalized(output, s.sample_rate)
