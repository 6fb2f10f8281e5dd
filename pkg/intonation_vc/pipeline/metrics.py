"""Diversity statistics over several conversions of one source."""
import logging
from typing import List, Sequence

import numpy as np

from intonation_vc.signal.pitch import F0Contour
from intonation_vc.signal.spectral import mel_distance
from intonation_vc.signal.types import MelSpectrogram

logger = logging.getLogger(__name__)


def pairwise_mel_distances(mels: Sequence[MelSpectrogram]) -> List[float]:
    """Distance of every unordered pair (i < j), in row-major pair order."""
    return [mel_distance(mels[i], mels[j]) for i in range(len(mels)) for j in range(i + 1, len(mels))]


def adjacent_mel_distances(mels: Sequence[MelSpectrogram]) -> List[float]:
    return [mel_distance(a, b) for a, b in zip(mels, mels[1:])]


def _exact_std(values: np.ndarray) -> float:
    # Centre on the first value so identical samples give exactly 0.
    offsets = values - values[0]
    centred = offsets - offsets.mean()
    return float(np.sqrt(np.mean(centred * centred)))


def frame_f0_std(contours: Sequence[F0Contour], min_voiced: int = 2) -> np.ndarray:
    """
    Standard deviation of f0 across samples for every frame.

    Frames voiced in fewer than ``min_voiced`` samples are nan.
    """
    f0 = np.stack([c.f0 for c in contours])
    voiced = np.stack([c.voiced for c in contours])
    result = np.full(f0.shape[1], np.nan)
    for t in range(f0.shape[1]):
        if voiced[:, t].sum() >= min_voiced:
            result[t] = _exact_std(f0[voiced[:, t], t])
    return result


def summarize_f0_std(per_frame: np.ndarray) -> float:
    """Mean over frames with a defined spread; 0 when no frame qualifies."""
    defined = per_frame[~np.isnan(per_frame)]
    if defined.size == 0:
        logger.warning("No frame was voiced in at least two samples; f0 spread reported as 0")
        return 0.0
    return float(defined.mean())
