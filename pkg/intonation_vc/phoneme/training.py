"""Classifier training by per-utterance Adam updates on the summed cross-entropy."""
import logging
from dataclasses import asdict, dataclass
from typing import TYPE_CHECKING, List, Optional, Sequence, Tuple

import numpy as np

from intonation_vc.config.models import RunConfig
from intonation_vc.errors import EmptyCorpusError
from intonation_vc.neural import AdamState, gradients, optimizer_step
from intonation_vc.seeding import Stream, rng_for
from intonation_vc.signal.frontend import FrontEnd

from .classifier import ClassifierModel, classifier_loss_graph
from .evaluation import LabeledFrames, top1_accuracy

if TYPE_CHECKING:
    from intonation_vc.harness.corpus import Corpus, Utterance

logger = logging.getLogger(__name__)


@dataclass
class TrainingMetrics:
    """Per-epoch classifier metrics; loss is per frame."""

    epoch: int
    loss: float
    train_accuracy: float
    held_out_accuracy: Optional[float] = None

    def to_dict(self) -> dict:
        return asdict(self)


def labeled_mels(utterances: Sequence["Utterance"], frontend: FrontEnd) -> List[LabeledFrames]:
    """Log-mel features and aligned frame labels of each utterance."""
    dataset = []
    for utt in utterances:
        _, mel = frontend.analyze(utt.waveform)
        utt.labels.check_frames(mel.n_frames)
        dataset.append((mel, utt.labels))
    return dataset


def train_classifier(
    corpus: "Corpus",
    config: Optional[RunConfig] = None,
    seed: Optional[int] = None,
) -> Tuple[ClassifierModel, List[TrainingMetrics]]:
    """
    Train the phoneme classifier on the corpus training split.

    :param corpus: Labeled corpus (all speakers are used)
    :param config: Run configuration (signal and classifier sections)
    :param seed: Root seed; defaults to ``config.seed``
    :return: The trained, frozen model and one TrainingMetrics per epoch
    """
    config = config or RunConfig()
    seed = config.seed if seed is None else seed
    frontend = FrontEnd(config.signal)
    train = labeled_mels(corpus.train, frontend)
    if not train:
        raise EmptyCorpusError("Cannot train the classifier: the training split has no utterances")
    held_out = labeled_mels(corpus.held_out, frontend)

    model = ClassifierModel.create(corpus.inventory, config.signal, config.classifier,
                                   rng_for(seed, Stream.CLASSIFIER_INIT))
    model.fit_normalization(np.concatenate([mel.mels for mel, _ in train]))
    opt_state = AdamState.init(model.params)
    lr = config.classifier.learning_rate
    logger.info(f"Training classifier on {len(train)} utterances ({model.params.flat_count()} parameters)")

    history: List[TrainingMetrics] = []
    for epoch in range(config.classifier.epochs):
        order = rng_for(seed, Stream.CLASSIFIER_DATA, epoch).permutation(len(train))
        total_loss, correct, frames = 0.0, 0, 0
        for index in order:
            mel, labels = train[index]
            graph, loss, probs = classifier_loss_graph(model, model.params, mel, labels)
            total_loss += float(graph.value(loss))
            correct += int(np.sum(np.argmax(graph.value(probs), axis=1) == labels.indices))
            frames += len(labels)
            model.params, opt_state = optimizer_step(model.params, gradients(graph, loss, model.params), opt_state, lr)

        metrics = TrainingMetrics(epoch + 1, total_loss / frames, correct / frames)
        if held_out:
            metrics.held_out_accuracy = top1_accuracy(model, held_out, config.workers)
        history.append(metrics)
        logger.info(
            f"classifier epoch {metrics.epoch}: loss/frame {metrics.loss:.4f} "
            f"train acc {metrics.train_accuracy:.3f} held-out acc {metrics.held_out_accuracy}"
        )

    model.trained = True
    return model.freeze(), history
