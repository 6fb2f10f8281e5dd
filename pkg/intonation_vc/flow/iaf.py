"""
Inverse autoregressive flow over the utterance latent.

Each step maps z to m + exp(s) * z where (m, s) come from a masked dense layer,
so coordinate i of (m, s) only sees earlier coordinates in the step's ordering.
Consecutive steps use opposite orderings.
"""
import logging
from dataclasses import dataclass, field
from typing import List, Mapping, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field

from intonation_vc.errors import ShapeMismatchError
from intonation_vc.latent import GaussianPosterior, as_vector, reparameterize
from intonation_vc.neural import Graph, MaskedDenseLayer, NetworkParams, NetworkSpec, mean_squared_error

logger = logging.getLogger(__name__)

LOG_2PI = float(np.log(2.0 * np.pi))


class FlowSpec(BaseModel):
    """Architecture of a flow chain: latent dimension, step count and log-scale clamp."""

    dim: int = Field(ge=1)
    steps: int = Field(default=4, ge=0)
    clamp: float = Field(default=7.0, gt=0.0)
    name: str = "flow"

    def step_spec(self, index: int) -> NetworkSpec:
        layer = MaskedDenseLayer(name="ar", blocks=2, reverse=index % 2 == 1)
        return NetworkSpec(name=f"{self.name}.step{index}", input_dim=self.dim, layers=[layer])

    def step_specs(self) -> List[NetworkSpec]:
        return [self.step_spec(i) for i in range(self.steps)]

    def init_params(self, rng: np.random.Generator, dtype=np.float32) -> NetworkParams:
        params = NetworkParams()
        for spec in self.step_specs():
            params.update(spec.init_params(rng, dtype))
        return params


@dataclass(frozen=True)
class FlowStepParams:
    """Masked weights (dim x 2*dim) and bias of one step; columns hold m then s."""

    weight: np.ndarray
    bias: np.ndarray
    reverse: bool = False
    clamp: float = 7.0

    def __post_init__(self) -> None:
        weight = np.asarray(self.weight, dtype=np.float64)
        bias = np.asarray(self.bias, dtype=np.float64).reshape(-1)
        if weight.ndim != 2 or weight.shape[1] != 2 * weight.shape[0] or bias.size != weight.shape[1]:
            raise ShapeMismatchError(f"Flow step needs a (D, 2D) weight and 2D bias, got {weight.shape}, {bias.shape}")
        object.__setattr__(self, "weight", weight)
        object.__setattr__(self, "bias", bias)

    @property
    def dim(self) -> int:
        return int(self.weight.shape[0])

    @property
    def mask(self) -> np.ndarray:
        return MaskedDenseLayer(name="ar", blocks=2, reverse=self.reverse).mask(self.dim)

    @classmethod
    def init(cls, dim: int, rng: np.random.Generator, reverse: bool = False, scale: float = 1.0) -> "FlowStepParams":
        bound = scale * np.sqrt(6.0 / (3 * dim))
        return cls(rng.uniform(-bound, bound, (dim, 2 * dim)), rng.uniform(-bound, bound, 2 * dim), reverse)

    @classmethod
    def identity(cls, dim: int, reverse: bool = False) -> "FlowStepParams":
        return cls(np.zeros((dim, 2 * dim)), np.zeros(2 * dim), reverse)

    def shift_and_log_scale(self, z: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        out = as_vector(z, self.dim, "flow input") @ (self.weight * self.mask) + self.bias
        return out[:self.dim], np.clip(out[self.dim:], -self.clamp, self.clamp)


def flow_steps(spec: FlowSpec, params: Mapping[str, np.ndarray]) -> List[FlowStepParams]:
    """Numeric step parameters of a chain stored in a NetworkParams map."""
    steps = []
    for i, step_spec in enumerate(spec.step_specs()):
        prefix = f"{step_spec.prefix}ar."
        steps.append(FlowStepParams(params[prefix + "W"], params[prefix + "b"], i % 2 == 1, spec.clamp))
    return steps


@dataclass
class FlowTrace:
    """Everything the flow loss needs: the noise, every latent and the total log-scale."""

    eps: np.ndarray
    z0: np.ndarray
    intermediates: List[np.ndarray] = field(default_factory=list)
    sum_log_sigma: float = 0.0

    @property
    def z_final(self) -> np.ndarray:
        return self.intermediates[-1] if self.intermediates else self.z0


def iaf_step(params: FlowStepParams, z_in: np.ndarray) -> Tuple[np.ndarray, float]:
    """z_out = m + exp(s) * z_in; returns (z_out, sum of s)."""
    z_in = as_vector(z_in, params.dim, "flow input")
    m, s = params.shift_and_log_scale(z_in)
    return m + np.exp(s) * z_in, float(np.sum(s))


def iaf_chain(post: GaussianPosterior, eps: np.ndarray, steps: Sequence[FlowStepParams]) -> FlowTrace:
    """Reparameterize then apply every step; sum_log_sigma includes sum(log sigma) of the posterior."""
    eps = as_vector(eps, post.dim, "eps")
    for step in steps:
        if step.dim != post.dim:
            raise ShapeMismatchError(f"Flow step dimension {step.dim} does not match latent dimension {post.dim}")
    z0 = reparameterize(post, eps)
    trace = FlowTrace(eps, z0, [], float(np.sum(post.log_sigma)))
    z = z0
    for step in steps:
        z, log_scale = iaf_step(step, z)
        trace.intermediates.append(z)
        trace.sum_log_sigma += log_scale
    return trace


def invert_step(params: FlowStepParams, z_out: np.ndarray) -> np.ndarray:
    """
    Solve z_out = m(z_in) + exp(s(z_in)) * z_in for z_in.

    Each pass fixes one more coordinate in the step's ordering, so ``dim``
    passes recover the input exactly.
    """
    z_out = as_vector(z_out, params.dim, "flow output")
    z_in = np.zeros_like(z_out)
    for _ in range(params.dim):
        m, s = params.shift_and_log_scale(z_in)
        z_in = (z_out - m) * np.exp(-s)
    return z_in


def iaf_inverse(post: GaussianPosterior, steps: Sequence[FlowStepParams], z_final: np.ndarray) -> np.ndarray:
    """Recover the noise vector that ``iaf_chain`` maps to ``z_final``."""
    z = as_vector(z_final, post.dim, "z")
    for step in reversed(steps):
        z = invert_step(step, z)
    return (z - post.mu) / post.sigma


def kl_estimate(trace: FlowTrace) -> float:
    """Single-draw KL estimate 0.5 * (|z_T|^2 - |eps|^2) - sum_log_sigma."""
    return float(0.5 * (np.sum(trace.z_final ** 2) - np.sum(trace.eps ** 2)) - trace.sum_log_sigma)


def iaf_loss(x: np.ndarray, x_hat: np.ndarray, trace: FlowTrace, beta: float = 1.0) -> Tuple[float, float, float]:
    """(recon + beta * kl, mean squared recon error, single-draw KL estimate)."""
    recon = mean_squared_error(x, x_hat)
    kl = kl_estimate(trace)
    return recon + beta * kl, recon, kl


def log_density(trace: FlowTrace) -> float:
    """log q(z_T) = log N(eps; 0, I) - sum_log_sigma."""
    eps = trace.eps
    return float(-0.5 * np.sum(eps ** 2) - 0.5 * eps.size * LOG_2PI - trace.sum_log_sigma)


def iaf_chain_node(g: Graph, spec: FlowSpec, params: Mapping[str, np.ndarray], z0: int) -> Tuple[int, Optional[int]]:
    """
    Record the chain on a graph starting from a (1, dim) latent node.

    :return: (final latent node, scalar node of the summed flow log-scales or
        None when the chain has no steps)
    """
    z, log_scale = z0, None
    for step_spec in spec.step_specs():
        out, _ = step_spec.build(g, params, z)
        m = g.op("slice", out, key=(slice(None), slice(0, spec.dim)))
        s = g.op("clip", g.op("slice", out, key=(slice(None), slice(spec.dim, 2 * spec.dim))),
                 low=-spec.clamp, high=spec.clamp)
        z = g.op("add", m, g.op("mul", g.op("exp", s), z))
        step_sum = g.op("sum", s)
        log_scale = step_sum if log_scale is None else g.op("add", log_scale, step_sum)
    return z, log_scale
