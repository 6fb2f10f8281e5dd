"""Corpus containers and frame labeling by majority overlap."""
from dataclasses import dataclass, field
from typing import FrozenSet, List, NamedTuple, Optional, Sequence

import numpy as np

from intonation_vc.errors import LabelFormatError, ShapeMismatchError
from intonation_vc.phoneme.inventory import PhonemeInventory, PhonemeLabels
from intonation_vc.signal.pitch import F0Contour
from intonation_vc.signal.spectral import num_frames
from intonation_vc.signal.types import Waveform


class Segment(NamedTuple):
    """Half-open sample interval [start, end) spoken as ``symbol``."""

    start: int
    end: int
    symbol: str


def frame_labels(
    segments: Sequence[Segment],
    n_samples: int,
    frame_len: int,
    hop: int,
    inventory: PhonemeInventory,
    source: Optional[str] = None,
) -> PhonemeLabels:
    """
    Label every analysis frame with the symbol covering most of its samples.

    Ties go to the earlier segment. A frame that no segment touches is an error.
    """
    starts = np.array([s.start for s in segments], dtype=np.int64)
    ends = np.array([s.end for s in segments], dtype=np.int64)
    indices = np.array([inventory.index(s.symbol) for s in segments], dtype=np.int64)
    count = num_frames(n_samples, frame_len, hop)
    labels = np.zeros(count, dtype=np.int64)
    for t in range(count):
        lo, hi = t * hop, t * hop + frame_len
        overlap = np.minimum(ends, hi) - np.maximum(starts, lo)
        if overlap.size == 0 or overlap.max() <= 0:
            raise LabelFormatError(f"analysis frame {t} (samples {lo}-{hi}) has no label", source)
        # Accumulate per symbol so a phoneme split over two segments still wins.
        per_symbol = np.zeros(len(inventory))
        np.add.at(per_symbol, indices, np.maximum(overlap, 0))
        best = per_symbol.max()
        candidates = [i for i, o in zip(indices, overlap) if o > 0 and per_symbol[i] == best]
        labels[t] = candidates[0]
    return PhonemeLabels(labels, len(inventory))


@dataclass
class Utterance:
    """One recording with its segmentation, frame labels and speaker."""

    name: str
    waveform: Waveform
    segments: List[Segment]
    labels: PhonemeLabels
    speaker: int = 0
    f0: Optional[F0Contour] = None

    @property
    def n_frames(self) -> int:
        return len(self.labels)


@dataclass
class Corpus:
    """Utterances, their inventory, and the held-out split."""

    utterances: List[Utterance]
    inventory: PhonemeInventory
    held_out_names: FrozenSet[str] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        names = [u.name for u in self.utterances]
        if len(set(names)) != len(names):
            raise ValueError("Utterance names must be unique")
        unknown = set(self.held_out_names) - set(names)
        if unknown:
            raise ValueError(f"Held-out names not in corpus: {sorted(unknown)[:5]}")
        for utt in self.utterances:
            if utt.labels.num_classes != len(self.inventory):
                raise ShapeMismatchError(f"{utt.name}: labels use {utt.labels.num_classes} classes")
        self.held_out_names = frozenset(self.held_out_names)

    def __len__(self) -> int:
        return len(self.utterances)

    def __iter__(self):
        return iter(self.utterances)

    @property
    def train(self) -> List[Utterance]:
        return [u for u in self.utterances if u.name not in self.held_out_names]

    @property
    def held_out(self) -> List[Utterance]:
        return [u for u in self.utterances if u.name in self.held_out_names]

    def for_speaker(self, speaker: int) -> List[Utterance]:
        return [u for u in self.utterances if u.speaker == speaker]

    def get(self, name: str) -> Utterance:
        for utt in self.utterances:
            if utt.name == name:
                return utt
        raise KeyError(f"No utterance named '{name}'")

    @property
    def speakers(self) -> List[int]:
        return sorted({u.speaker for u in self.utterances})


def split_held_out(names: Sequence[str], fraction: float, rng: np.random.Generator) -> FrozenSet[str]:
    """Seeded held-out subset; at least one utterance always stays in training."""
    count = min(int(round(fraction * len(names))), max(len(names) - 1, 0))
    order = rng.permutation(len(names))
    return frozenset(names[i] for i in order[:count])
