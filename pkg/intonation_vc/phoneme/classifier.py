"""Frame-level phoneme classifier: dense front layers, one gated-recurrent layer and a softmax head."""
import logging
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from intonation_vc.config.models import ClassifierConfig, SignalConfig
from intonation_vc.errors import ShapeMismatchError, UntrainedModelError
from intonation_vc.neural import (
    DenseLayer,
    Graph,
    GRULayer,
    NetworkParams,
    NetworkSpec,
    SoftmaxLayer,
    cross_entropy,
    cross_entropy_node,
    forward,
)
from intonation_vc.signal.types import MelSpectrogram

from .inventory import LinguisticFeatures, PhonemeInventory, PhonemeLabels

logger = logging.getLogger(__name__)

STD_FLOOR = 1e-3


def classifier_spec(n_mels: int, num_classes: int, config: Optional[ClassifierConfig] = None) -> NetworkSpec:
    config = config or ClassifierConfig()
    layers = [DenseLayer(name=f"dense{i}", units=w, activation="relu") for i, w in enumerate(config.dense_widths)]
    layers.append(GRULayer(name="gru", units=config.recurrent_width))
    layers.append(SoftmaxLayer(name="out", units=num_classes))
    return NetworkSpec(name="classifier", input_dim=n_mels, layers=layers)


@dataclass
class ClassifierModel:
    """
    Trainable parameters, architecture and inventory of the phoneme classifier.

    ``feature_mean``/``feature_std`` normalize each mel channel and are fixed
    from the training split rather than learned.
    """

    spec: NetworkSpec
    params: NetworkParams
    inventory: PhonemeInventory
    signal: SignalConfig = field(default_factory=SignalConfig)
    feature_mean: Optional[np.ndarray] = None
    feature_std: Optional[np.ndarray] = None
    trained: bool = False
    frozen: bool = False

    def __post_init__(self) -> None:
        if self.spec.output_dim != len(self.inventory):
            raise ShapeMismatchError(
                f"Classifier emits {self.spec.output_dim} classes but the inventory has {len(self.inventory)}"
            )
        n_mels = self.spec.input_dim
        if self.feature_mean is None:
            self.feature_mean = np.zeros(n_mels, dtype=np.float32)
        if self.feature_std is None:
            self.feature_std = np.ones(n_mels, dtype=np.float32)

    @classmethod
    def create(
        cls,
        inventory: PhonemeInventory,
        signal: Optional[SignalConfig] = None,
        config: Optional[ClassifierConfig] = None,
        rng: Optional[np.random.Generator] = None,
    ) -> "ClassifierModel":
        """Freshly initialized (or all-zero when ``rng`` is None) model."""
        signal = signal or SignalConfig()
        spec = classifier_spec(signal.n_mels, len(inventory), config)
        params = spec.init_params(rng) if rng is not None else spec.zero_params(np.float32)
        return cls(spec, params, inventory, signal)

    @property
    def num_classes(self) -> int:
        return len(self.inventory)

    def normalize(self, mels: np.ndarray) -> np.ndarray:
        return (mels - self.feature_mean) / self.feature_std

    def fit_normalization(self, mels: np.ndarray) -> None:
        """Set per-channel statistics from stacked training frames."""
        self.feature_mean = mels.mean(axis=0).astype(np.float32)
        self.feature_std = np.maximum(mels.std(axis=0), STD_FLOOR).astype(np.float32)

    def freeze(self) -> "ClassifierModel":
        """Read-only copy that may be shared by concurrent inference and synthesizer training."""
        params = self.params.copy()
        for value in params.values():
            value.setflags(write=False)
        return replace(self, params=params, frozen=True)

    def require_trained(self) -> None:
        if not self.trained:
            raise UntrainedModelError("The phoneme classifier has not been trained")


def _check_width(model: ClassifierModel, frames: MelSpectrogram) -> None:
    if frames.n_mels != model.spec.input_dim:
        raise ShapeMismatchError(f"Classifier expects {model.spec.input_dim} mel channels, got {frames.n_mels}")


def classify_frames(model: ClassifierModel, frames: MelSpectrogram) -> LinguisticFeatures:
    """Per-frame phoneme probabilities from a unidirectional recurrence over the frames."""
    _check_width(model, frames)
    probs, _, _ = forward(model.params.astype(np.float64), model.spec, model.normalize(frames.mels))
    return LinguisticFeatures(probs)


def classifier_loss(probs: LinguisticFeatures, labels: PhonemeLabels) -> float:
    """Cross-entropy summed over frames."""
    labels.check_frames(probs.n_frames)
    if labels.num_classes != probs.n_classes:
        raise ShapeMismatchError(f"Labels have {labels.num_classes} classes, probabilities {probs.n_classes}")
    return cross_entropy(probs.probs, labels.one_hot())


def classifier_loss_graph(model: ClassifierModel, params: NetworkParams, frames: MelSpectrogram,
                          labels: PhonemeLabels):
    """Record the loss of one utterance; returns (graph, loss node, probs node)."""
    _check_width(model, frames)
    labels.check_frames(frames.n_frames)
    graph = Graph(params.dtype)
    probs, _ = model.spec.build(graph, params, graph.const(model.normalize(frames.mels)))
    return graph, cross_entropy_node(graph, probs, labels.one_hot()), probs
