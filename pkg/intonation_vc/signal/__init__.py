"""Deterministic DSP kernels: framing, STFT, mel projection, Griffin-Lim and f0."""
from .frontend import FrontEnd
from .griffin_lim import griffin_lim
from .io import read_wav, write_pgm, write_wav
from .pitch import F0Contour, estimate_f0
from .spectral import (
    analysis_window,
    hz_to_mel,
    istft,
    mel_distance,
    mel_filterbank,
    mel_to_hz,
    num_frames,
    power_emphasis,
    signal_length,
    spectral_error,
    stft,
    stft_complex,
    to_mel,
    to_mel_linear,
)
from .types import LinSpectrogram, MelFilterbank, MelSpectrogram, Waveform

__all__ = [
    "FrontEnd",
    "Waveform",
    "LinSpectrogram",
    "MelSpectrogram",
    "MelFilterbank",
    "F0Contour",
    "stft",
    "stft_complex",
    "istft",
    "hz_to_mel",
    "mel_to_hz",
    "mel_filterbank",
    "to_mel",
    "to_mel_linear",
    "power_emphasis",
    "griffin_lim",
    "estimate_f0",
    "spectral_error",
    "mel_distance",
    "num_frames",
    "signal_length",
    "analysis_window",
    "read_wav",
    "write_wav",
    "write_pgm",
]
