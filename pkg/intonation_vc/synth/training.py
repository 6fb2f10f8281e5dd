"""Synthesizer training on target-speaker utterances conditioned by a frozen classifier."""
import logging
from dataclasses import asdict, dataclass
from typing import TYPE_CHECKING, List, Optional, Sequence, Tuple, Union

import numpy as np

from intonation_vc.config.models import RunConfig
from intonation_vc.errors import ClassifierNotFrozenError, EmptyCorpusError, UntrainedModelError
from intonation_vc.neural import AdamState, NetworkParams, gradients, optimizer_step
from intonation_vc.phoneme.classifier import ClassifierModel, classify_frames
from intonation_vc.seeding import Stream, rng_for
from intonation_vc.signal.frontend import FrontEnd

from .baseline import BaselineModel, baseline_loss_graph
from .cvae import SynthesizerModel, cvae_loss_graph

if TYPE_CHECKING:
    from intonation_vc.harness.corpus import Corpus

logger = logging.getLogger(__name__)

AnySynthesizer = Union[SynthesizerModel, BaselineModel]


@dataclass
class SynthMetrics:
    """Mean loss terms over the utterances of one epoch (kl is 0 for the baseline)."""

    epoch: int
    total: float
    recon: float
    kl: float

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class SynthesisExample:
    """Magnitudes of one utterance and the classifier's condition for it."""

    name: str
    mags: np.ndarray
    probs: np.ndarray


def check_classifier(classifier: Optional[ClassifierModel]) -> ClassifierModel:
    if classifier is None:
        raise UntrainedModelError("Synthesizer training needs a trained phoneme classifier")
    classifier.require_trained()
    if not classifier.frozen:
        raise ClassifierNotFrozenError("Freeze the phoneme classifier before training the synthesizer")
    return classifier


def prepare_examples(corpus: "Corpus", classifier: ClassifierModel, config: RunConfig) -> List[SynthesisExample]:
    """Target-speaker training utterances with their frozen-classifier conditions."""
    classifier = check_classifier(classifier)
    frontend = FrontEnd(config.signal)
    utterances = [u for u in corpus.train if u.speaker == config.corpus.target_speaker]
    if not utterances:
        raise EmptyCorpusError(f"No training utterances for target speaker {config.corpus.target_speaker}")
    examples = []
    for utt in utterances:
        spec, mel = frontend.analyze(utt.waveform)
        examples.append(SynthesisExample(utt.name, spec.mags, classify_frames(classifier, mel).probs))
    return examples


def magnitude_scale(examples: Sequence[SynthesisExample]) -> float:
    """Root mean square of every training magnitude."""
    total = sum(float(np.sum(e.mags ** 2)) for e in examples)
    count = sum(e.mags.size for e in examples)
    return max(float(np.sqrt(total / count)), 1e-8) if count else 1.0


def init_model(config: RunConfig, num_classes: int, scale: float, seed: int) -> AnySynthesizer:
    rng = rng_for(seed, Stream.SYNTH_INIT)
    if config.synth.baseline:
        return BaselineModel.create(num_classes, config.signal, config.synth, rng, scale)
    return SynthesizerModel.create(num_classes, config.signal, config.synth, config.flow, rng, scale)


def epoch_noise(seed: int, epoch: int, index: int, dim: int) -> np.ndarray:
    """Fresh reparameterization noise per utterance and epoch."""
    return rng_for(seed, Stream.SYNTH_EPS, epoch, index).standard_normal(dim)


def utterance_loss(model: AnySynthesizer, params: NetworkParams, example: SynthesisExample,
                   eps: Optional[np.ndarray], beta: float):
    """(graph, total node, (total, recon, kl) values) of one utterance."""
    x_scaled = example.mags / model.magnitude_scale
    if isinstance(model, BaselineModel):
        graph, loss = baseline_loss_graph(model, params, x_scaled, example.probs, params.dtype)
        value = float(graph.value(loss))
        return graph, loss, (value, value, 0.0)
    nodes = cvae_loss_graph(model, params, x_scaled, example.probs, eps, beta, params.dtype)
    return nodes.graph, nodes.total, nodes.values()


def mean_loss(model: AnySynthesizer, examples: Sequence[SynthesisExample], seed: int, epoch: int = 0,
              beta: float = 1.0) -> Tuple[float, float, float]:
    """Mean (total, recon, kl) over examples using the noise of ``epoch``."""
    dim = getattr(model, "latent_dim", 0)
    sums = np.zeros(3)
    for index, example in enumerate(examples):
        eps = epoch_noise(seed, epoch, index, dim) if dim else None
        sums += utterance_loss(model, model.params, example, eps, beta)[2]
    return tuple(float(v) for v in sums / max(len(examples), 1))  # type: ignore[return-value]


def train_synthesizer(
    corpus: "Corpus",
    classifier: Optional[ClassifierModel],
    config: Optional[RunConfig] = None,
    seed: Optional[int] = None,
) -> Tuple[AnySynthesizer, List[SynthMetrics]]:
    """
    Train the CVAE (with or without the flow posterior) or the baseline.

    :param corpus: Corpus holding target-speaker utterances
    :param classifier: Trained and frozen phoneme classifier
    :param config: Run configuration; ``synth.use_flow`` and ``synth.baseline`` pick the variant
    :param seed: Root seed; defaults to ``config.seed``
    :return: The trained model and one SynthMetrics per epoch
    """
    config = config or RunConfig()
    seed = config.seed if seed is None else seed
    examples = prepare_examples(corpus, classifier, config)
    model = init_model(config, classifier.num_classes, magnitude_scale(examples), seed)
    opt_state = AdamState.init(model.params)
    lr, beta = config.synth.learning_rate, config.synth.beta
    dim = getattr(model, "latent_dim", 0)
    variant = "baseline" if isinstance(model, BaselineModel) else model.kind
    logger.info(f"Training {variant} on {len(examples)} utterances ({model.params.flat_count()} parameters)")

    history: List[SynthMetrics] = []
    for epoch in range(config.synth.epochs):
        order = rng_for(seed, Stream.SYNTH_DATA, epoch).permutation(len(examples))
        sums = np.zeros(3)
        for index in order:
            eps = epoch_noise(seed, epoch, int(index), dim) if dim else None
            graph, loss, values = utterance_loss(model, model.params, examples[index], eps, beta)
            sums += values
            model.params, opt_state = optimizer_step(model.params, gradients(graph, loss, model.params), opt_state, lr)
        total, recon, kl = (float(v) for v in sums / len(examples))
        history.append(SynthMetrics(epoch + 1, total, recon, kl))
        logger.info(f"{variant} epoch {epoch + 1}: total {total:.4f} recon {recon:.4f} kl {kl:.4f}")

    model.trained = True
    return model, history
