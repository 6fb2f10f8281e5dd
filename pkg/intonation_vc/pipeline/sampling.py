"""Prior noise draws and linear interpolation between noise vectors."""
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from intonation_vc.config.models import SamplerConfig
from intonation_vc.errors import AlphaOutOfRangeError, ShapeMismatchError
from intonation_vc.latent import as_vector
from intonation_vc.seeding import Stream, rng_for


def sample_epsilon(cfg: SamplerConfig, dim: int, index: int = 0) -> np.ndarray:
    """
    Seeded draw from N(0, I), clamped per coordinate to the configured radius.

    :param cfg: Sampler seed and clamp radius
    :param dim: Latent dimension (>= 1)
    :param index: Draw number; distinct indices give independent draws
    """
    if dim < 1:
        raise ValueError(f"Latent dimension must be positive, got {dim}")
    eps = rng_for(cfg.seed, Stream.SAMPLER, index).standard_normal(dim)
    if cfg.clamp_radius is not None:
        eps = np.clip(eps, -cfg.clamp_radius, cfg.clamp_radius)
    return eps


@dataclass(frozen=True)
class InterpolationSpec:
    """Two noise vectors and the sorted weights in [0, 1] to visit between them."""

    eps1: np.ndarray
    eps2: np.ndarray
    alphas: Sequence[float]

    def __post_init__(self) -> None:
        eps1 = as_vector(self.eps1, what="eps1")
        eps2 = as_vector(self.eps2, eps1.size, "eps2")
        alphas = tuple(float(a) for a in self.alphas)
        for alpha in alphas:
            _check_alpha(alpha)
        if any(b < a for a, b in zip(alphas, alphas[1:])):
            raise ValueError("Interpolation weights must be sorted ascending")
        object.__setattr__(self, "eps1", eps1)
        object.__setattr__(self, "eps2", eps2)
        object.__setattr__(self, "alphas", alphas)

    @classmethod
    def uniform(cls, eps1: np.ndarray, eps2: np.ndarray, steps: int) -> "InterpolationSpec":
        """``steps`` evenly spaced weights from 0 to 1 inclusive."""
        if steps < 2:
            raise ValueError(f"An interpolation sweep needs at least 2 steps, got {steps}")
        return cls(eps1, eps2, [i / (steps - 1) for i in range(steps)])


def _check_alpha(alpha: float) -> None:
    if not 0.0 <= alpha <= 1.0:
        raise AlphaOutOfRangeError(f"alpha must lie in [0, 1], got {alpha}")


def interpolate(spec: InterpolationSpec, alpha: float) -> np.ndarray:
    """alpha * eps1 + (1 - alpha) * eps2."""
    _check_alpha(alpha)
    return alpha * spec.eps1 + (1.0 - alpha) * spec.eps2


def save_noise(path: Union[str, Path], eps: np.ndarray) -> Path:
    """Write a noise vector as text, one coordinate per line (exact round trip)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(path, as_vector(eps), fmt="%.17g")
    return path


def load_noise(path: Union[str, Path], dim: int = 0) -> np.ndarray:
    """Read a noise vector from a text file or a ``.npy`` array."""
    path = Path(path)
    values = np.load(path) if path.suffix == ".npy" else np.loadtxt(path, ndmin=1)
    vector = as_vector(values, what=f"noise vector {path}")
    if dim and vector.size != dim:
        raise ShapeMismatchError(f"{path} holds a {vector.size}-dimensional vector, expected {dim}")
    return vector
