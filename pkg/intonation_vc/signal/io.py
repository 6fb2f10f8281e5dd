"""WAV (PCM16 mono) and PGM (P5) file I/O."""
import logging
from pathlib import Path
from typing import Union

import numpy as np
from scipy.io import wavfile

from intonation_vc.errors import AudioFormatError

from .types import Waveform

logger = logging.getLogger(__name__)

PCM_SCALE = 32768.0


def read_wav(path: Union[str, Path]) -> Waveform:
    """Read a 16-bit PCM mono WAV file; samples are divided by 32768."""
    try:
        sample_rate, data = wavfile.read(str(path))
    except ValueError as e:
        raise AudioFormatError(f"{path}: not a readable WAV file ({e})") from e
    if data.dtype != np.int16:
        raise AudioFormatError(f"{path}: expected 16-bit PCM, got {data.dtype}")
    if data.ndim != 1:
        raise AudioFormatError(f"{path}: expected mono audio, got {data.shape[1]} channels")
    return Waveform(data.astype(np.float64) / PCM_SCALE, int(sample_rate))


def write_wav(path: Union[str, Path], w: Waveform) -> Path:
    """Write a waveform as 16-bit PCM mono."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pcm = np.clip(np.round(w.samples * PCM_SCALE), -32768, 32767).astype("<i2")
    wavfile.write(str(path), w.sample_rate, pcm)
    logger.debug(f"Wrote {len(w)} samples to {path}")
    return path


def write_pgm(path: Union[str, Path], matrix: np.ndarray) -> Path:
    """
    Write a matrix as a binary greyscale PGM image.

    One pixel per entry, rows of the matrix become image rows, values scaled
    linearly so the image minimum is 0 and its maximum 255.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    values = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
    low, high = float(values.min()), float(values.max())
    if high > low:
        pixels = np.round((values - low) / (high - low) * 255.0)
    else:
        pixels = np.zeros_like(values)
    height, width = values.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{width} {height}\n255\n".encode("ascii"))
        f.write(pixels.astype(np.uint8).tobytes(order="C"))
    return path
