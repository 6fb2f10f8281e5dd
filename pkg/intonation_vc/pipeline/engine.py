"""
End-to-end conversion.

A source waveform is analyzed to log-mel frames, the frozen classifier turns
them into phoneme probabilities, the synthesizer decodes a magnitude
spectrogram driven by a prior noise vector, and Griffin-Lim renders the
power-emphasized magnitudes as audio.
"""
import csv
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from intonation_vc.config.models import RunConfig, SamplerConfig
from intonation_vc.errors import ShapeMismatchError
from intonation_vc.phoneme.classifier import ClassifierModel, classify_frames
from intonation_vc.phoneme.evaluation import frame_agreement
from intonation_vc.phoneme.inventory import LinguisticFeatures
from intonation_vc.seeding import Stream, rng_for
from intonation_vc.signal.frontend import FrontEnd
from intonation_vc.signal.griffin_lim import griffin_lim
from intonation_vc.signal.io import write_pgm, write_wav
from intonation_vc.signal.pitch import F0Contour, estimate_f0
from intonation_vc.signal.spectral import mel_distance, power_emphasis
from intonation_vc.signal.types import LinSpectrogram, MelSpectrogram, Waveform
from intonation_vc.synth.baseline import BaselineModel, baseline_synthesize
from intonation_vc.synth.cvae import SynthesizerModel, decode, latent_from_noise

from .metrics import adjacent_mel_distances, frame_f0_std, pairwise_mel_distances, summarize_f0_std
from .sampling import InterpolationSpec, interpolate, sample_epsilon

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


@dataclass
class ConversionResult:
    """One converted utterance."""

    waveform: Waveform
    spectrogram: LinSpectrogram
    mel: MelSpectrogram
    eps_used: np.ndarray
    f0_contour: F0Contour
    condition: Optional[LinguisticFeatures] = None
    files: List[Path] = field(default_factory=list)

    def to_dict(self) -> Dict:
        log_mean, log_std = self.f0_contour.log_stats()
        return {
            "frames": self.spectrogram.n_frames,
            "samples": len(self.waveform),
            "eps": [float(v) for v in self.eps_used],
            "voiced_frames": int(self.f0_contour.voiced.sum()),
            "log_f0_mean": log_mean,
            "log_f0_std": log_std,
            "files": [str(p) for p in self.files],
        }


@dataclass
class SweepResult:
    """Conversions along an interpolation path plus adjacent-step mel distances."""

    alphas: Tuple[float, ...]
    results: List[ConversionResult]
    step_distances: List[float]
    files: List[Path] = field(default_factory=list)

    @property
    def endpoint_distance(self) -> float:
        return mel_distance(self.results[0].mel, self.results[-1].mel)

    def to_dict(self) -> Dict:
        return {
            "alphas": list(self.alphas),
            "step_distances": self.step_distances,
            "endpoint_distance": self.endpoint_distance,
            "files": [str(p) for p in self.files],
        }


@dataclass
class DiversityReport:
    """Spread of several conversions of one source."""

    num_samples: int
    pairwise_distances: List[float]
    f0_std_per_frame: np.ndarray
    results: List[ConversionResult] = field(default_factory=list, repr=False)
    files: List[Path] = field(default_factory=list)

    @property
    def mean_pairwise_distance(self) -> float:
        return float(np.mean(self.pairwise_distances)) if self.pairwise_distances else 0.0

    @property
    def mean_f0_std(self) -> float:
        return summarize_f0_std(self.f0_std_per_frame)

    def to_dict(self) -> Dict:
        return {
            "num_samples": self.num_samples,
            "mean_pairwise_mel_distance": self.mean_pairwise_distance,
            "pairwise_mel_distances": self.pairwise_distances,
            "mean_f0_std": self.mean_f0_std,
            "f0_std_per_frame": [None if np.isnan(v) else float(v) for v in self.f0_std_per_frame],
            "files": [str(p) for p in self.files],
        }


class ConversionEngine:
    """
    Converts source utterances with a frozen classifier and a trained synthesizer.

    Models are only read, so one engine may serve concurrent conversions.
    """

    def __init__(
        self,
        classifier: ClassifierModel,
        synthesizer: Union[SynthesizerModel, BaselineModel],
        config: Optional[RunConfig] = None,
    ):
        classifier.require_trained()
        synthesizer.require_trained()
        if synthesizer.num_classes != classifier.num_classes:
            raise ShapeMismatchError(
                f"Synthesizer expects {synthesizer.num_classes} phoneme classes, classifier emits {classifier.num_classes}"
            )
        self.classifier = classifier
        self.synthesizer = synthesizer
        self.config = config or RunConfig()
        self.frontend = FrontEnd(self.config.signal)

    @property
    def is_baseline(self) -> bool:
        return isinstance(self.synthesizer, BaselineModel)

    @property
    def latent_dim(self) -> int:
        return 0 if isinstance(self.synthesizer, BaselineModel) else self.synthesizer.latent_dim

    def condition(self, source: Waveform) -> LinguisticFeatures:
        """Phoneme probabilities of the source frames."""
        _, mel = self.frontend.analyze(source)
        return classify_frames(self.classifier, mel)

    def synthesize(self, c: LinguisticFeatures, eps: Optional[np.ndarray]) -> LinSpectrogram:
        """Clamped magnitudes for a condition; ``eps`` is ignored by the baseline."""
        if isinstance(self.synthesizer, BaselineModel):
            return baseline_synthesize(self.synthesizer, c)
        if eps is None:
            raise ValueError("The CVAE synthesizer needs a noise vector")
        return decode(self.synthesizer, latent_from_noise(self.synthesizer, eps), c)

    def vocode(self, spectrogram: LinSpectrogram) -> Waveform:
        vocoder = self.config.vocoder
        return griffin_lim(power_emphasis(spectrogram, vocoder.power), vocoder.griffin_lim_iters, vocoder.seed)

    def convert(self, source: Waveform, eps: Optional[np.ndarray] = None,
                condition: Optional[LinguisticFeatures] = None) -> ConversionResult:
        """
        Convert one source utterance.

        :param source: Source waveform at the configured sample rate
        :param eps: Prior noise vector of the latent dimension (unused by the baseline)
        :param condition: Precomputed phoneme probabilities of ``source``
        """
        if source.sample_rate != self.config.signal.sample_rate:
            raise ValueError(f"Source is {source.sample_rate} Hz, models expect {self.config.signal.sample_rate} Hz")
        c = condition if condition is not None else self.condition(source)
        spectrogram = self.synthesize(c, eps)
        waveform = self.vocode(spectrogram)
        pitch = self.config.pitch
        signal = self.config.signal
        f0 = estimate_f0(waveform, signal.frame_len, signal.hop, pitch.fmin, pitch.fmax, pitch.voicing_threshold)
        eps_used = np.zeros(0) if self.is_baseline or eps is None else np.asarray(eps, dtype=np.float64).copy()
        return ConversionResult(waveform, spectrogram, self.frontend.mel(spectrogram), eps_used, f0, c)

    def convert_many(self, source: Waveform, noises: Sequence[Optional[np.ndarray]]) -> List[ConversionResult]:
        """Convert with every noise vector; results keep the input order."""
        c = self.condition(source)
        workers = self.config.workers
        if workers > 1 and len(noises) > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                return list(pool.map(lambda eps: self.convert(source, eps, c), noises))
        return [self.convert(source, eps, c) for eps in noises]

    def interpolation_sweep(
        self,
        source: Waveform,
        spec: InterpolationSpec,
        out_dir: Optional[PathLike] = None,
        stem: str = "converted",
    ) -> SweepResult:
        """
        Convert at every weight of ``spec``.

        With ``out_dir`` each step writes ``<stem>_a<alpha>.wav`` and a PGM mel
        image, and ``<stem>_sweep.csv`` lists the mel distance of each adjacent
        pair keyed by the later weight.
        """
        if len(spec.alphas) < 2:
            raise ValueError("An interpolation sweep needs at least 2 weights")
        results = self.convert_many(source, [interpolate(spec, alpha) for alpha in spec.alphas])
        sweep = SweepResult(tuple(spec.alphas), results, adjacent_mel_distances([r.mel for r in results]))
        if out_dir is not None:
            out = Path(out_dir)
            for alpha, result in zip(spec.alphas, results):
                name = f"{stem}_a{alpha:.4f}"
                result.files.append(write_wav(out / f"{name}.wav", result.waveform))
                result.files.append(write_pgm(out / f"{name}.pgm", result.mel.mels))
                sweep.files.extend(result.files)
            csv_path = out / f"{stem}_sweep.csv"
            with open(csv_path, "w", newline="", encoding="utf-8") as f:
                writer = csv.writer(f, lineterminator="\n")
                writer.writerow(["alpha", "mel_l2"])
                for alpha, distance in zip(spec.alphas[1:], sweep.step_distances):
                    writer.writerow([f"{alpha:.4f}", repr(float(distance))])
            sweep.files.append(csv_path)
            logger.info(f"Wrote {len(results)} sweep steps to {out}")
        return sweep

    def diversity_report(
        self,
        source: Waveform,
        cfg: Optional[SamplerConfig] = None,
        out_dir: Optional[PathLike] = None,
        stem: str = "converted",
    ) -> DiversityReport:
        """
        Convert ``cfg.num_samples`` times and measure the spread of the outputs.

        The CVAE uses draws 0..n-1 of the sampler; the baseline simply runs n
        times.
        """
        cfg = cfg or self.config.sampler
        if cfg.num_samples < 2:
            raise ValueError("A diversity report needs at least 2 samples")
        if self.is_baseline:
            noises: List[Optional[np.ndarray]] = [None] * cfg.num_samples
        else:
            noises = [sample_epsilon(cfg, self.latent_dim, i) for i in range(cfg.num_samples)]
        results = self.convert_many(source, noises)
        report = DiversityReport(
            cfg.num_samples,
            pairwise_mel_distances([r.mel for r in results]),
            frame_f0_std([r.f0_contour for r in results]),
            results,
        )
        if out_dir is not None:
            for i, result in enumerate(results):
                result.files.append(write_wav(Path(out_dir) / f"{stem}_s{i}.wav", result.waveform))
                report.files.extend(result.files)
        logger.info(
            f"Diversity over {cfg.num_samples} samples: mean mel distance {report.mean_pairwise_distance:.4f}, "
            f"mean f0 std {report.mean_f0_std:.3f} Hz"
        )
        return report

    def linguistic_agreement(self, result: ConversionResult, source_labels: np.ndarray) -> float:
        """Fraction of frames where the classifier's reading of the output matches the source labels."""
        predicted = classify_frames(self.classifier, result.mel).argmax()
        return frame_agreement(np.asarray(source_labels), predicted)

    def continuity_profile(
        self,
        source: Waveform,
        eps: np.ndarray,
        deltas: Sequence[float] = (0.5, 0.25, 0.125, 0.0625),
        directions: int = 5,
        seed: int = 0,
    ) -> Dict[float, List[float]]:
        """Mel distance between eps and eps + delta * u for random unit directions u."""
        c = self.condition(source)
        base = self.frontend.mel(self.synthesize(c, eps))
        rng = rng_for(seed, Stream.SAMPLER, 1 << 20)
        units = rng.standard_normal((directions, self.latent_dim))
        units /= np.linalg.norm(units, axis=1, keepdims=True)
        profile: Dict[float, List[float]] = {}
        for delta in deltas:
            profile[float(delta)] = [
                mel_distance(base, self.frontend.mel(self.synthesize(c, eps + delta * u))) for u in units
            ]
        return profile


def convert(
    source: Waveform,
    classifier: ClassifierModel,
    synthesizer: Union[SynthesizerModel, BaselineModel],
    eps: Optional[np.ndarray],
    config: Optional[RunConfig] = None,
) -> ConversionResult:
    """Convert one utterance without keeping an engine around."""
    return ConversionEngine(classifier, synthesizer, config).convert(source, eps)
