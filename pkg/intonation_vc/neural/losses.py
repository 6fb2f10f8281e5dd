"""Loss functions, both as plain array functions and as graph builders."""
import numpy as np

from intonation_vc.errors import NotADistributionError, ShapeMismatchError

from .graph import Graph

PROB_FLOOR = 1e-12
ROW_SUM_TOL = 1e-5


def _check_rows(probs: np.ndarray, targets: np.ndarray) -> None:
    if probs.shape[0] != targets.shape[0]:
        raise ShapeMismatchError(f"Row counts differ: {probs.shape[0]} predictions vs {targets.shape[0]} targets")
    if probs.shape != targets.shape:
        raise ShapeMismatchError(f"Prediction shape {probs.shape} does not match target shape {targets.shape}")
    if np.any(probs < 0.0) or not np.allclose(probs.sum(axis=1), 1.0, atol=ROW_SUM_TOL):
        raise NotADistributionError("Predictions must be nonnegative rows summing to 1")
    if not np.all((targets == 0.0) | (targets == 1.0)) or not np.all(targets.sum(axis=1) == 1.0):
        raise NotADistributionError("Targets must be one-hot rows")


def cross_entropy(probs: np.ndarray, targets: np.ndarray) -> float:
    """
    Sum over rows of -log(probability of the target class), floored at 1e-12.

    ``probs`` rows must be distributions and ``targets`` rows one-hot;
    anything else raises NotADistributionError.
    """
    probs = np.atleast_2d(np.asarray(probs, dtype=np.float64))
    targets = np.atleast_2d(np.asarray(targets, dtype=np.float64))
    _check_rows(probs, targets)
    return float(-np.sum(targets * np.log(np.maximum(probs, PROB_FLOOR))))


def cross_entropy_node(g: Graph, probs: int, targets: np.ndarray) -> int:
    """Graph version of ``cross_entropy`` for one-hot ``targets``."""
    _check_rows(g.value(probs), np.atleast_2d(targets))
    log_probs = g.op("log", g.op("clip", probs, low=PROB_FLOOR, high=np.inf))
    return g.op("scale", g.op("sum", g.op("mul", log_probs, g.const(targets))), factor=-1.0)


def mean_squared_error(x: np.ndarray, x_hat: np.ndarray) -> float:
    """Mean over all elements of (x - x_hat)^2."""
    x, x_hat = np.asarray(x, dtype=np.float64), np.asarray(x_hat, dtype=np.float64)
    if x.shape != x_hat.shape:
        raise ShapeMismatchError(f"Reconstruction shape {x_hat.shape} does not match target {x.shape}")
    return float(np.mean((x - x_hat) ** 2))


def mean_squared_error_node(g: Graph, target: np.ndarray, estimate: int) -> int:
    if np.shape(target) != g.value(estimate).shape:
        raise ShapeMismatchError(f"Reconstruction shape {g.value(estimate).shape} does not match target {np.shape(target)}")
    return g.op("mean", g.op("square", g.op("sub", estimate, g.const(target))))


def gaussian_kl(mu: np.ndarray, sigma: np.ndarray) -> float:
    """KL(N(mu, diag(sigma^2)) || N(0, I)) summed over dimensions."""
    mu, sigma = np.asarray(mu, dtype=np.float64), np.asarray(sigma, dtype=np.float64)
    if mu.shape != sigma.shape:
        raise ShapeMismatchError(f"mu {mu.shape} and sigma {sigma.shape} differ")
    return float(0.5 * np.sum(mu ** 2 + sigma ** 2 - 2.0 * np.log(sigma) - 1.0))


def gaussian_kl_node(g: Graph, mu: int, log_var: int) -> int:
    """Graph KL from (mu, log_var): 0.5 * sum(mu^2 + exp(log_var) - log_var - 1)."""
    terms = g.op("sub", g.op("add", g.op("square", mu), g.op("exp", log_var)), log_var)
    return g.op("scale", g.op("add", g.op("sum", terms), g.const(-float(g.value(mu).size))), factor=0.5)
