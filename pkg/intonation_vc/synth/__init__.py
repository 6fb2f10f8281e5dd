"""Speech synthesizer: conditional VAE with optional flow posterior, and the deterministic baseline."""
from intonation_vc.latent import GaussianPosterior, reparameterize

from .baseline import BaselineModel, baseline_loss_graph, baseline_specs, baseline_synthesize
from .cvae import (
    SynthesizerModel,
    cvae_loss,
    cvae_loss_graph,
    cvae_specs,
    decode,
    decode_raw,
    encode,
    latent_from_noise,
    reconstruct,
)
from .training import (
    SynthesisExample,
    SynthMetrics,
    init_model,
    magnitude_scale,
    mean_loss,
    prepare_examples,
    train_synthesizer,
)

__all__ = [
    "GaussianPosterior",
    "reparameterize",
    "SynthesizerModel",
    "BaselineModel",
    "cvae_specs",
    "baseline_specs",
    "encode",
    "decode",
    "decode_raw",
    "latent_from_noise",
    "reconstruct",
    "cvae_loss",
    "cvae_loss_graph",
    "baseline_synthesize",
    "baseline_loss_graph",
    "train_synthesizer",
    "prepare_examples",
    "init_model",
    "magnitude_scale",
    "mean_loss",
    "SynthMetrics",
    "SynthesisExample",
]
