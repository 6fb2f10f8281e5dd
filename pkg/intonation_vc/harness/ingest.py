"""
Reading and writing corpora on disk.

Layout: ``wav/<stem>.wav`` (16-bit PCM mono), ``labels/<stem>.phn`` with one
``start end symbol`` segment per line (half-open sample intervals, sorted,
non-overlapping), ``inventory.txt``, and optionally ``pitch/<stem>.f0`` and
``corpus.yaml`` holding speakers and the held-out split.
"""
import logging
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np
import yaml

from intonation_vc.config.models import SignalConfig
from intonation_vc.errors import (
    AudioFormatError,
    EmptyCorpusError,
    LabelFormatError,
    MissingPairError,
    UnknownPhonemeError,
)
from intonation_vc.phoneme.inventory import PhonemeInventory
from intonation_vc.seeding import Stream, rng_for
from intonation_vc.signal.io import read_wav, write_wav
from intonation_vc.signal.pitch import F0Contour

from .corpus import Corpus, Segment, Utterance, frame_labels, split_held_out

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
LABEL_SUFFIX = ".phn"
METADATA_FILE = "corpus.yaml"


def parse_labels(text: str, inventory: PhonemeInventory, source: Optional[str] = None,
                 n_samples: Optional[int] = None) -> List[Segment]:
    """Parse label text; errors name the file and line."""
    segments: List[Segment] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) != 3:
            raise LabelFormatError(f"expected 'start end symbol', got {line!r}", source, lineno)
        try:
            start, end = int(fields[0]), int(fields[1])
        except ValueError:
            raise LabelFormatError(f"sample positions must be integers, got {line!r}", source, lineno) from None
        if start < 0 or end <= start:
            raise LabelFormatError(f"empty or negative interval [{start}, {end})", source, lineno)
        if segments and start < segments[-1].end:
            raise LabelFormatError(
                f"segment [{start}, {end}) overlaps or precedes the previous one ending at {segments[-1].end}",
                source, lineno,
            )
        if n_samples is not None and end > n_samples:
            raise LabelFormatError(f"segment end {end} is past the last sample ({n_samples})", source, lineno)
        if fields[2] not in inventory:
            raise UnknownPhonemeError(f"unknown phoneme '{fields[2]}'", source, lineno)
        segments.append(Segment(start, end, fields[2]))
    if not segments:
        raise LabelFormatError("no segments", source)
    return segments


def format_labels(segments: List[Segment]) -> str:
    return "".join(f"{s.start} {s.end} {s.symbol}\n" for s in segments)


def load_corpus(
    audio_dir: PathLike,
    label_dir: PathLike,
    inventory_file: PathLike,
    signal: Optional[SignalConfig] = None,
    metadata: Optional[Dict] = None,
    held_out_fraction: float = 0.2,
    seed: int = 0,
) -> Corpus:
    """
    Load every WAV file of ``audio_dir`` with its same-stem label file.

    :param metadata: Optional ``{"speakers": {stem: id}, "held_out": [stems]}``;
        without it every utterance is speaker 0 and the split is drawn from ``seed``
    """
    signal = signal or SignalConfig()
    inventory = PhonemeInventory.from_file(inventory_file)
    audio_dir, label_dir = Path(audio_dir), Path(label_dir)
    wavs = {p.stem: p for p in sorted(audio_dir.glob("*.wav"))} if audio_dir.is_dir() else {}
    labels = {p.stem: p for p in sorted(label_dir.glob(f"*{LABEL_SUFFIX}"))} if label_dir.is_dir() else {}
    if not wavs:
        raise EmptyCorpusError(f"No utterances: {audio_dir} holds no .wav files")
    unpaired = sorted(set(wavs) ^ set(labels))
    if unpaired:
        stem = unpaired[0]
        missing = label_dir / f"{stem}{LABEL_SUFFIX}" if stem in wavs else audio_dir / f"{stem}.wav"
        raise MissingPairError(f"{missing} is missing ({len(unpaired)} unpaired files)")

    metadata = metadata or {}
    speakers = metadata.get("speakers", {})
    pitch_dir = audio_dir.parent / "pitch"
    utterances = []
    for stem, wav_path in wavs.items():
        waveform = read_wav(wav_path)
        if waveform.sample_rate != signal.sample_rate:
            raise AudioFormatError(f"{wav_path}: sample rate {waveform.sample_rate} Hz, expected {signal.sample_rate}")
        label_path = labels[stem]
        segments = parse_labels(label_path.read_text(encoding="utf-8"), inventory, str(label_path), len(waveform))
        frame_ids = frame_labels(segments, len(waveform), signal.frame_len, signal.hop, inventory, str(label_path))
        f0 = _read_pitch(pitch_dir / f"{stem}.f0", signal) if (pitch_dir / f"{stem}.f0").exists() else None
        utterances.append(Utterance(stem, waveform, segments, frame_ids, int(speakers.get(stem, 0)), f0))

    if "held_out" in metadata:
        held_out = frozenset(metadata["held_out"])
    else:
        held_out = split_held_out([u.name for u in utterances], held_out_fraction, rng_for(seed, Stream.SPLIT))
    logger.info(f"Loaded {len(utterances)} utterances from {audio_dir}")
    return Corpus(utterances, inventory, held_out)


def load_corpus_dir(root: PathLike, signal: Optional[SignalConfig] = None, held_out_fraction: float = 0.2,
                    seed: int = 0) -> Corpus:
    """Load a corpus laid out as written by ``save_corpus``."""
    root = Path(root)
    metadata_path = root / METADATA_FILE
    metadata = yaml.safe_load(metadata_path.read_text(encoding="utf-8")) if metadata_path.exists() else None
    return load_corpus(root / "wav", root / "labels", root / "inventory.txt", signal, metadata,
                       held_out_fraction, seed)


def _read_pitch(path: Path, signal: SignalConfig) -> F0Contour:
    rows = np.loadtxt(path, ndmin=2)
    return F0Contour(rows[:, 0], rows[:, 1].astype(bool), signal.hop, signal.sample_rate)


def save_corpus(corpus: Corpus, root: PathLike) -> List[Path]:
    """Write ``corpus`` in the on-disk layout; returns every file written."""
    root = Path(root)
    for sub in ("wav", "labels", "pitch"):
        (root / sub).mkdir(parents=True, exist_ok=True)
    written = [corpus.inventory.to_file(root / "inventory.txt")]
    for utt in corpus.utterances:
        written.append(write_wav(root / "wav" / f"{utt.name}.wav", utt.waveform))
        label_path = root / "labels" / f"{utt.name}{LABEL_SUFFIX}"
        label_path.write_text(format_labels(utt.segments), encoding="utf-8")
        written.append(label_path)
        if utt.f0 is not None:
            pitch_path = root / "pitch" / f"{utt.name}.f0"
            np.savetxt(pitch_path, np.column_stack([utt.f0.f0, utt.f0.voiced.astype(int)]), fmt=["%.6f", "%d"])
            written.append(pitch_path)
    metadata = {
        "speakers": {u.name: u.speaker for u in corpus.utterances},
        "held_out": sorted(corpus.held_out_names),
    }
    metadata_path = root / METADATA_FILE
    metadata_path.write_text(yaml.safe_dump(metadata, sort_keys=True), encoding="utf-8")
    written.append(metadata_path)
    logger.info(f"Saved {len(corpus)} utterances to {root}")
    return written
