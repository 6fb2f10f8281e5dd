"""Adaptive-moment (Adam) optimizer as a pure update function."""
from dataclasses import dataclass
from typing import Mapping, Tuple

import numpy as np

from intonation_vc.errors import ParameterKeyMismatchError

from .params import NetworkParams

BETA1 = 0.9
BETA2 = 0.999
EPSILON = 1e-8


@dataclass
class AdamState:
    """First and second moment estimates plus the step counter."""

    step: int
    m: NetworkParams
    v: NetworkParams

    @classmethod
    def init(cls, params: NetworkParams) -> "AdamState":
        return cls(0, params.zeros_like(), params.zeros_like())


def optimizer_step(
    params: NetworkParams,
    grads: Mapping[str, np.ndarray],
    opt_state: AdamState,
    lr: float = 1e-3,
) -> Tuple[NetworkParams, AdamState]:
    """
    One bias-corrected Adam update.

    Inputs are not modified; new parameter and state objects are returned.
    """
    if set(grads) != set(params):
        missing = sorted(set(params) - set(grads))
        extra = sorted(set(grads) - set(params))
        raise ParameterKeyMismatchError(f"Gradient keys differ from parameters (missing {missing}, unexpected {extra})")

    step = opt_state.step + 1
    correction1 = 1.0 - BETA1 ** step
    correction2 = 1.0 - BETA2 ** step
    new_params, new_m, new_v = NetworkParams(), NetworkParams(), NetworkParams()
    for name, value in params.items():
        grad = np.asarray(grads[name], dtype=value.dtype)
        m = BETA1 * opt_state.m[name] + (1.0 - BETA1) * grad
        v = BETA2 * opt_state.v[name] + (1.0 - BETA2) * grad * grad
        update = lr * (m / correction1) / (np.sqrt(v / correction2) + EPSILON)
        new_params[name] = (value - update).astype(value.dtype)
        new_m[name] = m.astype(value.dtype)
        new_v[name] = v.astype(value.dtype)
    return new_params, AdamState(step, new_m, new_v)
