"""Phoneme inventories, frame labels and per-frame phoneme probabilities."""
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence, Tuple, Union

import numpy as np

from intonation_vc.errors import ShapeMismatchError, UnknownPhonemeError

# Toy inventory of the synthetic corpus; "eh" and "ae" share close formants.
DEFAULT_SYMBOLS = ("sil", "aa", "iy", "uw", "eh", "ae", "m", "s")
CONFUSABLE_PAIR = ("eh", "ae")


@dataclass(frozen=True)
class PhonemeInventory:
    """Ordered list of K distinct phoneme symbols."""

    symbols: Tuple[str, ...]

    def __post_init__(self) -> None:
        symbols = tuple(str(s) for s in self.symbols)
        if len(symbols) < 2:
            raise ValueError(f"A phoneme inventory needs at least 2 symbols, got {len(symbols)}")
        if len(set(symbols)) != len(symbols):
            raise ValueError("Phoneme inventory contains duplicate symbols")
        if any(not s or any(ch.isspace() for ch in s) for s in symbols):
            raise ValueError("Phoneme symbols must be non-empty and contain no whitespace")
        object.__setattr__(self, "symbols", symbols)

    def __len__(self) -> int:
        return len(self.symbols)

    def __contains__(self, symbol: object) -> bool:
        return symbol in self.symbols

    def index(self, symbol: str) -> int:
        try:
            return self.symbols.index(symbol)
        except ValueError:
            raise UnknownPhonemeError(f"Unknown phoneme '{symbol}'") from None

    def symbol(self, index: int) -> str:
        return self.symbols[index]

    def one_hot(self, indices: Sequence[int]) -> np.ndarray:
        return np.eye(len(self))[np.asarray(indices, dtype=np.int64)]

    @classmethod
    def default(cls) -> "PhonemeInventory":
        return cls(DEFAULT_SYMBOLS)

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "PhonemeInventory":
        """One symbol per line; blank lines and ``#`` comments are skipped."""
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        return cls(tuple(line.split("#", 1)[0].strip() for line in lines if line.split("#", 1)[0].strip()))

    def to_file(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.write_text("\n".join(self.symbols) + "\n", encoding="utf-8")
        return path


@dataclass(frozen=True)
class PhonemeLabels:
    """Per-frame phoneme indices aligned to a spectrogram's frames."""

    indices: np.ndarray
    num_classes: int

    def __post_init__(self) -> None:
        indices = np.array(np.ravel(self.indices), dtype=np.int64, copy=True)
        if indices.size and (indices.min() < 0 or indices.max() >= self.num_classes):
            raise ValueError(f"Frame labels must lie in [0, {self.num_classes})")
        indices.setflags(write=False)
        object.__setattr__(self, "indices", indices)

    def __len__(self) -> int:
        return int(self.indices.size)

    def one_hot(self) -> np.ndarray:
        return np.eye(self.num_classes)[self.indices]

    def check_frames(self, n_frames: int) -> None:
        if len(self) != n_frames:
            raise ShapeMismatchError(f"{len(self)} frame labels for {n_frames} analysis frames")


@dataclass(frozen=True)
class LinguisticFeatures:
    """Frames x K phoneme probabilities; the speaker-independent condition."""

    probs: np.ndarray

    def __post_init__(self) -> None:
        probs = np.array(np.atleast_2d(self.probs), dtype=np.float64, copy=True)
        if not np.all(np.isfinite(probs)) or np.any(probs < 0):
            raise ValueError("Phoneme probabilities must be finite and non-negative")
        if probs.size and np.max(np.abs(probs.sum(axis=1) - 1.0)) > 1e-6:
            raise ValueError("Every phoneme probability row must sum to 1")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    @property
    def n_frames(self) -> int:
        return int(self.probs.shape[0])

    @property
    def n_classes(self) -> int:
        return int(self.probs.shape[1])

    def argmax(self) -> np.ndarray:
        return np.argmax(self.probs, axis=1)


def symbols_to_labels(symbols: Iterable[str], inventory: PhonemeInventory) -> PhonemeLabels:
    return PhonemeLabels(np.array([inventory.index(s) for s in symbols], dtype=np.int64), len(inventory))
