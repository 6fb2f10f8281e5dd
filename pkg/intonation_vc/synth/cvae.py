"""
Conditional VAE synthesizer.

The encoder reads concat(x_t, c_t) for every frame and maps its final hidden
state to one utterance-level Gaussian posterior; the decoder receives the
phoneme probabilities with the latent appended to every frame and emits one
magnitude frame per condition frame.
"""
import logging
from dataclasses import dataclass, field
from typing import Mapping, Optional, Tuple

import numpy as np

from intonation_vc.config.models import FlowConfig, SignalConfig, SynthConfig
from intonation_vc.errors import ShapeMismatchError, UntrainedModelError
from intonation_vc.flow import FlowSpec, flow_steps, iaf_chain, iaf_chain_node
from intonation_vc.latent import GaussianPosterior, as_vector, reparameterize
from intonation_vc.neural import (
    DenseLayer,
    Graph,
    GRULayer,
    NetworkParams,
    NetworkSpec,
    forward,
    gaussian_kl,
    gaussian_kl_node,
    mean_squared_error,
    mean_squared_error_node,
)
from intonation_vc.phoneme.inventory import LinguisticFeatures
from intonation_vc.signal.types import LinSpectrogram

logger = logging.getLogger(__name__)


def cvae_specs(n_bins: int, num_classes: int, config: Optional[SynthConfig] = None):
    """(encoder, posterior head, decoder) network specifications."""
    config = config or SynthConfig()
    encoder = NetworkSpec(
        name="encoder",
        input_dim=n_bins + num_classes,
        layers=[GRULayer(name="gru", units=config.encoder_width)],
    )
    head = NetworkSpec(
        name="posterior",
        input_dim=config.encoder_width,
        layers=[DenseLayer(name="stats", units=2 * config.latent_dim)],
    )
    decoder = NetworkSpec(
        name="decoder",
        input_dim=num_classes + config.latent_dim,
        layers=[
            GRULayer(name="gru", units=config.decoder_width),
            DenseLayer(name="out", units=n_bins, activation="softplus"),
        ],
    )
    return encoder, head, decoder


@dataclass
class SynthesizerModel:
    """Encoder, decoder and optional flow of the CVAE, with one parameter store."""

    encoder: NetworkSpec
    head: NetworkSpec
    decoder: NetworkSpec
    params: NetworkParams
    latent_dim: int
    num_classes: int
    n_bins: int
    flow: Optional[FlowSpec] = None
    magnitude_scale: float = 1.0
    signal: SignalConfig = field(default_factory=SignalConfig)
    trained: bool = False

    def __post_init__(self) -> None:
        if self.decoder.input_dim != self.num_classes + self.latent_dim:
            raise ShapeMismatchError(
                f"Decoder input width {self.decoder.input_dim} != {self.num_classes} classes + {self.latent_dim} latent"
            )
        if self.decoder.output_dim != self.n_bins:
            raise ShapeMismatchError(f"Decoder emits {self.decoder.output_dim} bins, expected {self.n_bins}")

    @classmethod
    def create(
        cls,
        num_classes: int,
        signal: Optional[SignalConfig] = None,
        config: Optional[SynthConfig] = None,
        flow_config: Optional[FlowConfig] = None,
        rng: Optional[np.random.Generator] = None,
        magnitude_scale: float = 1.0,
    ) -> "SynthesizerModel":
        """New model; all-zero parameters when ``rng`` is None."""
        signal = signal or SignalConfig()
        config = config or SynthConfig()
        encoder, head, decoder = cvae_specs(signal.n_bins, num_classes, config)
        flow = None
        if config.use_flow:
            flow_config = flow_config or FlowConfig()
            flow = FlowSpec(dim=config.latent_dim, steps=flow_config.steps, clamp=flow_config.log_scale_clamp)
        params = NetworkParams()
        for spec in (encoder, head, decoder):
            params.update(spec.init_params(rng) if rng is not None else spec.zero_params(np.float32))
        if flow is not None:
            if rng is not None:
                params.update(flow.init_params(rng))
            else:
                for spec in flow.step_specs():
                    params.update(spec.zero_params(np.float32))
        return cls(encoder, head, decoder, params, config.latent_dim, num_classes, signal.n_bins, flow,
                   magnitude_scale, signal)

    @property
    def kind(self) -> str:
        return "synth+flow" if self.flow is not None else "synth"

    def require_trained(self) -> None:
        if not self.trained:
            raise UntrainedModelError("The synthesizer has not been trained")

    def _spectrogram(self, mags: np.ndarray) -> LinSpectrogram:
        s = self.signal
        return LinSpectrogram(mags, s.frame_len, s.hop, s.n_fft, s.sample_rate)


def _check_condition(model: SynthesizerModel, c: LinguisticFeatures) -> None:
    if c.n_classes != model.num_classes:
        raise ShapeMismatchError(f"Condition has {c.n_classes} phoneme classes, model expects {model.num_classes}")


def encode(model: SynthesizerModel, x: LinSpectrogram, c: LinguisticFeatures) -> GaussianPosterior:
    """Utterance-level posterior from the final encoder state; sigma = exp(log_var / 2)."""
    if x.n_frames != c.n_frames:
        raise ShapeMismatchError(f"Spectrogram has {x.n_frames} frames but the condition has {c.n_frames}")
    if x.n_bins != model.n_bins:
        raise ShapeMismatchError(f"Spectrogram has {x.n_bins} bins, model expects {model.n_bins}")
    _check_condition(model, c)
    params = model.params.astype(np.float64)
    inputs = np.concatenate([x.mags / model.magnitude_scale, c.probs], axis=1)
    hidden, _, _ = forward(params, model.encoder, inputs)
    stats, _, _ = forward(params, model.head, hidden[-1:])
    d = model.latent_dim
    return GaussianPosterior.from_log_var(stats[0, :d], stats[0, d:])


def latent_from_noise(model: SynthesizerModel, eps: np.ndarray, post: Optional[GaussianPosterior] = None) -> np.ndarray:
    """Latent driven by ``eps``: through the posterior (prior when None) and the flow steps if present."""
    post = post or GaussianPosterior.standard(model.latent_dim)
    eps = as_vector(eps, model.latent_dim, "eps")
    if model.flow is None:
        return reparameterize(post, eps)
    return iaf_chain(post, eps, flow_steps(model.flow, model.params)).z_final


def decode_raw(model: SynthesizerModel, z: np.ndarray, c: LinguisticFeatures) -> np.ndarray:
    """Unclamped decoder output in magnitude units, frames x bins.

    The output layer is a softplus, so values are strictly positive and the
    log-mel of a decode moves smoothly with the latent.
    """
    z = as_vector(z, model.latent_dim, "z")
    _check_condition(model, c)
    inputs = np.concatenate([c.probs, np.broadcast_to(z, (c.n_frames, z.size))], axis=1)
    out, _, _ = forward(model.params.astype(np.float64), model.decoder, inputs)
    return out * model.magnitude_scale


def decode(model: SynthesizerModel, z: np.ndarray, c: LinguisticFeatures) -> LinSpectrogram:
    """One magnitude frame per condition frame, clamped at zero."""
    return model._spectrogram(np.maximum(decode_raw(model, z, c), 0.0))


def reconstruct(model: SynthesizerModel, x: LinSpectrogram, c: LinguisticFeatures, eps: np.ndarray) -> LinSpectrogram:
    """Posterior path: encode, reparameterize (and flow), decode."""
    return decode(model, latent_from_noise(model, eps, encode(model, x, c)), c)


def cvae_loss(x: LinSpectrogram, x_hat: LinSpectrogram, post: GaussianPosterior,
              beta: float = 1.0) -> Tuple[float, float, float]:
    """(recon + beta * kl, mean squared error, closed-form Gaussian KL)."""
    if x.mags.shape != x_hat.mags.shape:
        raise ShapeMismatchError(f"Spectrogram shapes differ: {x.mags.shape} vs {x_hat.mags.shape}")
    recon = mean_squared_error(x.mags, x_hat.mags)
    kl = gaussian_kl(post.mu, post.sigma)
    return recon + beta * kl, recon, kl


@dataclass
class LossNodes:
    graph: Graph
    total: int
    recon: int
    kl: int

    def values(self) -> Tuple[float, float, float]:
        return tuple(float(self.graph.value(n)) for n in (self.total, self.recon, self.kl))  # type: ignore[return-value]


def cvae_loss_graph(
    model: SynthesizerModel,
    params: Mapping[str, np.ndarray],
    x_scaled: np.ndarray,
    probs: np.ndarray,
    eps: np.ndarray,
    beta: float = 1.0,
    dtype=np.float32,
) -> LossNodes:
    """
    Record the training loss of one utterance on scaled magnitudes.

    Without a flow the KL term is closed form; with a flow it is the
    single-draw estimate 0.5 * (|z_T|^2 - |eps|^2) - sum of log-scales, where
    the sum includes the posterior's log sigma.
    """
    g = Graph(dtype)
    d = model.latent_dim
    steps = x_scaled.shape[0]
    if probs.shape[0] != steps:
        raise ShapeMismatchError(f"Spectrogram has {steps} frames but the condition has {probs.shape[0]}")
    condition = g.const(probs)
    hidden, _ = model.encoder.build(g, params, g.op("concat", g.const(x_scaled), condition, axis=1))
    stats, _ = model.head.build(g, params, g.op("slice", hidden, key=(slice(steps - 1, steps), slice(None))))
    mu = g.op("slice", stats, key=(slice(None), slice(0, d)))
    log_var = g.op("slice", stats, key=(slice(None), slice(d, 2 * d)))
    half_log_var = g.op("scale", log_var, factor=0.5)
    z = g.op("add", mu, g.op("mul", g.op("exp", half_log_var), g.const(np.reshape(eps, (1, d)))))

    if model.flow is None:
        kl = gaussian_kl_node(g, mu, log_var)
    else:
        z, flow_log_scale = iaf_chain_node(g, model.flow, params, z)
        log_sigma = g.op("sum", half_log_var)
        if flow_log_scale is not None:
            log_sigma = g.op("add", log_sigma, flow_log_scale)
        energy = g.op("scale", g.op("add", g.op("sum", g.op("square", z)),
                                    g.const(-float(np.sum(np.square(eps))))), factor=0.5)
        kl = g.op("sub", energy, log_sigma)

    decoder_in = g.op("concat", condition, g.op("broadcast_rows", z, rows=steps), axis=1)
    x_hat, _ = model.decoder.build(g, params, decoder_in)
    recon = mean_squared_error_node(g, x_scaled, x_hat)
    total = g.op("add", recon, g.op("scale", kl, factor=beta))
    return LossNodes(g, total, recon, kl)
