"""Latent-space types shared by the synthesizer, the flow and the sampler."""
from dataclasses import dataclass

import numpy as np

from intonation_vc.errors import ShapeMismatchError


def as_vector(values, dim: int = 0, what: str = "vector") -> np.ndarray:
    """Validate a finite 1-D float64 vector, optionally of a given dimension."""
    vector = np.asarray(values, dtype=np.float64).reshape(-1)
    if dim and vector.size != dim:
        raise ShapeMismatchError(f"{what} has dimension {vector.size}, expected {dim}")
    if not np.all(np.isfinite(vector)):
        raise ValueError(f"{what} contains non-finite values")
    return vector


@dataclass(frozen=True)
class GaussianPosterior:
    """Diagonal Gaussian N(mu, diag(sigma^2)) over the utterance latent."""

    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self) -> None:
        mu = as_vector(self.mu, what="mu")
        sigma = as_vector(self.sigma, mu.size, "sigma")
        if np.any(sigma <= 0):
            raise ValueError("sigma must be strictly positive")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)

    @property
    def dim(self) -> int:
        return int(self.mu.size)

    @property
    def log_sigma(self) -> np.ndarray:
        return np.log(self.sigma)

    @classmethod
    def from_log_var(cls, mu: np.ndarray, log_var: np.ndarray) -> "GaussianPosterior":
        return cls(mu, np.exp(0.5 * np.asarray(log_var, dtype=np.float64)))

    @classmethod
    def standard(cls, dim: int) -> "GaussianPosterior":
        """The prior N(0, I)."""
        return cls(np.zeros(dim), np.ones(dim))


def reparameterize(post: GaussianPosterior, eps: np.ndarray) -> np.ndarray:
    """z = mu + sigma * eps, elementwise."""
    return post.mu + post.sigma * as_vector(eps, post.dim, "eps")
