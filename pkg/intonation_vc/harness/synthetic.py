"""
Synthetic speech corpus by additive formant synthesis.

Each utterance is a random phoneme sequence. Voiced phonemes are sums of
harmonics of a time-varying f0 shaped by a formant envelope, the fricative is
band-limited noise and silence is a faint noise floor. Formant tracks are
smoothed across segment boundaries and scaled per speaker.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from scipy.signal import butter, sosfilt

from intonation_vc.config.models import CorpusConfig, SignalConfig
from intonation_vc.errors import UnknownPhonemeError
from intonation_vc.phoneme.inventory import PhonemeInventory
from intonation_vc.seeding import Stream, rng_for
from intonation_vc.signal.pitch import F0Contour
from intonation_vc.signal.spectral import num_frames
from intonation_vc.signal.types import Waveform

from .corpus import Corpus, Segment, Utterance, frame_labels, split_held_out

logger = logging.getLogger(__name__)

PEAK = 0.9
NOISE_FLOOR = 0.002
SMOOTHING_MS = 15.0
FORMANT_GAINS = (1.0, 0.6, 0.3)


@dataclass(frozen=True)
class PhonemeProfile:
    """Formant frequencies and bandwidths (Hz) plus source levels of one phoneme."""

    formants: Tuple[float, float, float]
    bandwidths: Tuple[float, float, float] = (90.0, 110.0, 170.0)
    voicing: float = 1.0
    frication: float = 0.0

    @property
    def voiced(self) -> bool:
        return self.voicing > 0


SILENCE = PhonemeProfile((500.0, 1500.0, 2500.0), voicing=0.0)

PROFILES: Dict[str, PhonemeProfile] = {
    "sil": SILENCE,
    "aa": PhonemeProfile((730.0, 1090.0, 2440.0)),
    "iy": PhonemeProfile((270.0, 2290.0, 3010.0)),
    "uw": PhonemeProfile((300.0, 870.0, 2240.0)),
    # eh and ae are deliberately close.
    "eh": PhonemeProfile((560.0, 1800.0, 2480.0)),
    "ae": PhonemeProfile((620.0, 1720.0, 2450.0)),
    "m": PhonemeProfile((280.0, 1000.0, 2200.0), (60.0, 200.0, 250.0), voicing=0.45),
    "s": PhonemeProfile((500.0, 1500.0, 2500.0), voicing=0.0, frication=0.35),
}

CONTOURS = ("flat", "rising", "falling", "peaked")


def speaker_scale(speaker: int) -> float:
    """Formant scale of a speaker: 1.0 for speaker 0, then alternating around it."""
    step = (speaker + 1) // 2
    return 1.0 + 0.06 * step * (-1 if speaker % 2 else 1)


def contour_shape(name: str, position: np.ndarray) -> np.ndarray:
    """Relative f0 over normalized time in [0, 1]."""
    if name == "flat":
        return np.ones_like(position)
    if name == "rising":
        return 0.85 + 0.4 * position
    if name == "falling":
        return 1.25 - 0.4 * position
    if name == "peaked":
        return 0.9 + 0.35 * np.sin(np.pi * position)
    raise ValueError(f"Unknown pitch contour '{name}'; choose from {CONTOURS}")


def _smooth(track: np.ndarray, width: int) -> np.ndarray:
    if width < 2:
        return track
    kernel = np.hanning(width)
    kernel /= kernel.sum()
    padded = np.pad(track, (width // 2, width - 1 - width // 2), mode="edge")
    return np.convolve(padded, kernel, mode="valid")


def _profile(symbol: str) -> PhonemeProfile:
    if symbol not in PROFILES:
        raise UnknownPhonemeError(f"No synthesis profile for phoneme '{symbol}'")
    return PROFILES[symbol]


def _draw_segments(rng: np.random.Generator, inventory: PhonemeInventory, config: CorpusConfig,
                   sample_rate: int) -> list:
    speech = [s for s in inventory.symbols if s != "sil"]
    count = int(rng.integers(config.min_segments, config.max_segments + 1))
    symbols = ["sil"] if "sil" in inventory else []
    while len(symbols) < count - (1 if "sil" in inventory else 0):
        choice = speech[int(rng.integers(len(speech)))]
        if not symbols or symbols[-1] != choice or len(speech) == 1:
            symbols.append(choice)
    if "sil" in inventory:
        symbols.append("sil")

    segments, cursor = [], 0
    for symbol in symbols:
        length = int(round(rng.uniform(config.min_segment_ms, config.max_segment_ms) * sample_rate / 1000.0))
        segments.append(Segment(cursor, cursor + length, symbol))
        cursor += length
    return segments


def render(segments: Sequence[Segment], f0_track: np.ndarray, sample_rate: int, formant_scale: float,
           rng: np.random.Generator) -> np.ndarray:
    """Samples of one utterance (not yet normalized) from its segmentation and per-sample f0."""
    n = f0_track.size
    formants = np.zeros((3, n))
    bandwidths = np.zeros((3, n))
    voicing = np.zeros(n)
    frication = np.zeros(n)
    for seg in segments:
        profile = _profile(seg.symbol)
        formants[:, seg.start:seg.end] = np.array(profile.formants)[:, None] * formant_scale
        bandwidths[:, seg.start:seg.end] = np.array(profile.bandwidths)[:, None] * formant_scale
        voicing[seg.start:seg.end] = profile.voicing
        frication[seg.start:seg.end] = profile.frication

    width = int(SMOOTHING_MS * sample_rate / 1000.0)
    formants = np.stack([_smooth(track, width) for track in formants])
    bandwidths = np.stack([_smooth(track, width) for track in bandwidths])
    voicing = _smooth(voicing, width)
    frication = _smooth(frication, width)

    nyquist = sample_rate / 2.0
    phase = 2.0 * np.pi * np.cumsum(f0_track) / sample_rate
    voiced = np.zeros(n)
    for h in range(1, int((nyquist - 200.0) / f0_track.min()) + 1):
        freq = h * f0_track
        envelope = sum(
            gain / (1.0 + ((freq - formants[k]) / (0.5 * bandwidths[k])) ** 2)
            for k, gain in enumerate(FORMANT_GAINS)
        )
        voiced += np.where(freq < nyquist - 200.0, envelope, 0.0) * np.sin(h * phase)
    voiced /= max(float(np.max(np.abs(voiced))), 1e-12)

    band = butter(4, [3500.0, min(7000.0, nyquist - 100.0)], btype="bandpass", fs=sample_rate, output="sos")
    hiss = sosfilt(band, rng.standard_normal(n))
    hiss /= max(float(np.max(np.abs(hiss))), 1e-12)
    floor = NOISE_FLOOR * rng.standard_normal(n)
    return voicing * voiced + frication * hiss + floor


def synthesize_utterance(
    index: int,
    seed: int,
    inventory: PhonemeInventory,
    config: CorpusConfig,
    signal: SignalConfig,
) -> Utterance:
    """Deterministic utterance number ``index`` of the corpus with root ``seed``."""
    rng = rng_for(seed, Stream.CORPUS, index)
    sr = signal.sample_rate
    speaker = index % config.speakers
    scale = speaker_scale(speaker)

    segments = _draw_segments(rng, inventory, config, sr)
    n = segments[-1].end
    if n < signal.frame_len:
        extra = signal.frame_len - n
        segments[-1] = Segment(segments[-1].start, segments[-1].end + extra, segments[-1].symbol)
        n = segments[-1].end

    contour = config.contours[int(rng.integers(len(config.contours)))]
    base = rng.uniform(100.0, 160.0) / scale
    f0_track = base * contour_shape(contour, np.arange(n) / max(n - 1, 1))
    samples = render(segments, f0_track, sr, scale, rng)
    waveform = Waveform.normalized(samples, sr, PEAK)

    labels = frame_labels(segments, n, signal.frame_len, signal.hop, inventory)
    count = num_frames(n, signal.frame_len, signal.hop)
    frame_f0 = np.array([f0_track[t * signal.hop:t * signal.hop + signal.frame_len].mean() for t in range(count)])
    voiced = np.array([_profile(inventory.symbol(i)).voiced for i in labels.indices], dtype=bool)
    truth = F0Contour(np.where(voiced, frame_f0, 0.0), voiced, signal.hop, sr)
    return Utterance(f"utt{index:04d}", waveform, segments, labels, speaker, truth)


def generate_corpus(
    seed: int,
    n_utterances: Optional[int] = None,
    inventory: Optional[PhonemeInventory] = None,
    contours: Optional[Sequence[str]] = None,
    config: Optional[CorpusConfig] = None,
    signal: Optional[SignalConfig] = None,
    workers: int = 1,
) -> Corpus:
    """
    Generate a labeled multi-speaker corpus.

    :param seed: Root seed; the same seed always gives the same corpus
    :param n_utterances: Overrides ``config.utterances``
    :param inventory: Phonemes to draw from (each needs a synthesis profile)
    :param contours: Pitch contour family, overriding ``config.contours``
    :param workers: Threads rendering utterances; the result does not depend on it
    """
    config = config or CorpusConfig()
    updates = {}
    if n_utterances is not None:
        updates["utterances"] = n_utterances
    if contours is not None:
        updates["contours"] = list(contours)
    if updates:
        config = CorpusConfig(**{**config.model_dump(), **updates})
    signal = signal or SignalConfig()
    inventory = inventory or PhonemeInventory.default()
    for symbol in inventory.symbols:
        _profile(symbol)

    def make(index: int) -> Utterance:
        return synthesize_utterance(index, seed, inventory, config, signal)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            utterances = list(pool.map(make, range(config.utterances)))
    else:
        utterances = [make(i) for i in range(config.utterances)]

    names = [u.name for u in utterances]
    held_out = split_held_out(names, config.held_out_fraction, rng_for(seed, Stream.SPLIT))
    logger.info(f"Generated {len(utterances)} utterances ({len(held_out)} held out) with seed {seed}")
    return Corpus(utterances, inventory, held_out)
