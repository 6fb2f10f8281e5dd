"""Conversion pipeline, latent sampling and diversity metrics."""
from .engine import ConversionEngine, ConversionResult, DiversityReport, SweepResult, convert
from .metrics import adjacent_mel_distances, frame_f0_std, pairwise_mel_distances, summarize_f0_std
from .sampling import InterpolationSpec, interpolate, load_noise, sample_epsilon, save_noise

__all__ = [
    "ConversionEngine",
    "convert",
    "ConversionResult",
    "DiversityReport",
    "SweepResult",
    "InterpolationSpec",
    "interpolate",
    "sample_epsilon",
    "save_noise",
    "load_noise",
    "pairwise_mel_distances",
    "adjacent_mel_distances",
    "frame_f0_std",
    "summarize_f0_std",
]
