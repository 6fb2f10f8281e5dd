"""
Deterministic baseline: phoneme probabilities to magnitudes through two CBHG-lite blocks.

A block is a convolution bank, max-pooling, two projection convolutions with
a residual connection, highway layers and a bidirectional recurrent layer.
"""
import logging
from dataclasses import dataclass, field
from typing import List, Mapping, Optional, Tuple

import numpy as np

from intonation_vc.config.models import SignalConfig, SynthConfig
from intonation_vc.errors import ShapeMismatchError, UntrainedModelError
from intonation_vc.neural import (
    BiGRULayer,
    Conv1dLayer,
    ConvBankLayer,
    DenseLayer,
    Graph,
    HighwayLayer,
    MaxPool1dLayer,
    NetworkParams,
    NetworkSpec,
    mean_squared_error_node,
)
from intonation_vc.phoneme.inventory import LinguisticFeatures
from intonation_vc.signal.types import LinSpectrogram

logger = logging.getLogger(__name__)

NUM_BLOCKS = 2


def baseline_specs(n_bins: int, num_classes: int, config: Optional[SynthConfig] = None) -> List[NetworkSpec]:
    """Prenet, (conv, post) spec pair per block, and the output projection, in order."""
    config = config or SynthConfig()
    width = config.baseline_width
    projection = config.bank_channels * config.bank_kernels
    specs = [NetworkSpec(name="baseline.prenet", input_dim=num_classes,
                         layers=[DenseLayer(name="dense", units=width, activation="relu")])]
    block_in = width
    for b in range(NUM_BLOCKS):
        specs.append(NetworkSpec(name=f"baseline.block{b}.conv", input_dim=block_in, layers=[
            ConvBankLayer(name="bank", channels=config.bank_channels, max_kernel=config.bank_kernels),
            MaxPool1dLayer(name="pool", width=2),
            Conv1dLayer(name="proj1", channels=projection, kernel=3, activation="relu"),
            Conv1dLayer(name="proj2", channels=block_in, kernel=3),
        ]))
        post_layers = [HighwayLayer(name=f"highway{i}") for i in range(config.highway_layers)]
        post_layers.append(BiGRULayer(name="rnn", units=width))
        specs.append(NetworkSpec(name=f"baseline.block{b}.post", input_dim=block_in, layers=post_layers))
        block_in = 2 * width
    specs.append(NetworkSpec(name="baseline.out", input_dim=block_in, layers=[DenseLayer(name="dense", units=n_bins)]))
    return specs


@dataclass
class BaselineModel:
    """Parameters and block specifications of the baseline."""

    specs: List[NetworkSpec]
    params: NetworkParams
    num_classes: int
    n_bins: int
    magnitude_scale: float = 1.0
    signal: SignalConfig = field(default_factory=SignalConfig)
    trained: bool = False
    kind: str = field(default="baseline", init=False)

    def __post_init__(self) -> None:
        if self.specs[0].input_dim != self.num_classes or self.specs[-1].output_dim != self.n_bins:
            raise ShapeMismatchError("Baseline specs do not map the condition width to the spectrogram bins")

    @classmethod
    def create(
        cls,
        num_classes: int,
        signal: Optional[SignalConfig] = None,
        config: Optional[SynthConfig] = None,
        rng: Optional[np.random.Generator] = None,
        magnitude_scale: float = 1.0,
    ) -> "BaselineModel":
        signal = signal or SignalConfig()
        specs = baseline_specs(signal.n_bins, num_classes, config)
        params = NetworkParams()
        for spec in specs:
            params.update(spec.init_params(rng) if rng is not None else spec.zero_params(np.float32))
        return cls(specs, params, num_classes, signal.n_bins, magnitude_scale, signal)

    def require_trained(self) -> None:
        if not self.trained:
            raise UntrainedModelError("The baseline synthesizer has not been trained")


def baseline_node(g: Graph, model: BaselineModel, params: Mapping[str, np.ndarray], condition: int) -> int:
    """Record the baseline on a graph; returns the (frames, bins) output in scaled units."""
    prenet, *blocks, output = model.specs
    x, _ = prenet.build(g, params, condition)
    for conv, post in zip(blocks[0::2], blocks[1::2]):
        residual, _ = conv.build(g, params, x)
        x, _ = post.build(g, params, g.op("add", residual, x))
    out, _ = output.build(g, params, x)
    return out


def baseline_synthesize(model: BaselineModel, c: LinguisticFeatures) -> LinSpectrogram:
    """Deterministic condition-to-spectrogram map, clamped at zero."""
    if c.n_classes != model.num_classes:
        raise ShapeMismatchError(f"Condition has {c.n_classes} phoneme classes, baseline expects {model.num_classes}")
    g = Graph(np.float64)
    out = baseline_node(g, model, model.params.astype(np.float64), g.const(c.probs))
    s = model.signal
    mags = np.maximum(g.value(out) * model.magnitude_scale, 0.0)
    return LinSpectrogram(mags, s.frame_len, s.hop, s.n_fft, s.sample_rate)


def baseline_loss_graph(model: BaselineModel, params: Mapping[str, np.ndarray], x_scaled: np.ndarray,
                        probs: np.ndarray, dtype=np.float32) -> Tuple[Graph, int]:
    """Record the reconstruction loss of one utterance on scaled magnitudes."""
    if x_scaled.shape[0] != probs.shape[0]:
        raise ShapeMismatchError(f"Spectrogram has {x_scaled.shape[0]} frames but the condition has {probs.shape[0]}")
    g = Graph(dtype)
    out = baseline_node(g, model, params, g.const(probs))
    return g, mean_squared_error_node(g, x_scaled, out)
