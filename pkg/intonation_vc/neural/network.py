"""Sequential networks: specification, initialization, forward pass and gradient checks."""
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field

from intonation_vc.errors import ShapeMismatchError

from .graph import Graph, gradients
from .layers import LayerContext, LayerSpec, ParamShape
from .params import NetworkParams

logger = logging.getLogger(__name__)


@dataclass
class RecurrentState:
    """Final hidden vector of every recurrent layer, keyed by layer path."""

    hidden: Dict[str, np.ndarray] = field(default_factory=dict)

    def copy(self) -> "RecurrentState":
        return RecurrentState({k: v.copy() for k, v in self.hidden.items()})


class NetworkSpec(BaseModel):
    """An ordered stack of layers applied to (frames, input_dim) inputs."""

    name: str = Field(description="Prefix of every parameter path")
    input_dim: int = Field(ge=1)
    layers: List[LayerSpec] = Field(default_factory=list)

    @property
    def prefix(self) -> str:
        return f"{self.name}." if self.name else ""

    def widths(self) -> List[int]:
        """Input width of every layer followed by the output width."""
        dims = [self.input_dim]
        for layer in self.layers:
            dims.append(layer.output_dim(dims[-1]))
        return dims

    @property
    def output_dim(self) -> int:
        return self.widths()[-1]

    def param_shapes(self) -> Dict[str, ParamShape]:
        shapes: Dict[str, ParamShape] = {}
        for layer, in_dim in zip(self.layers, self.widths()):
            for local, shape in layer.param_shapes(in_dim).items():
                shapes[f"{self.prefix}{layer.name}.{local}"] = shape
        return shapes

    def init_params(self, rng: np.random.Generator, dtype=np.float32) -> NetworkParams:
        """Glorot-uniform weights and zero biases."""
        params = NetworkParams()
        for path, shape in sorted(self.param_shapes().items()):
            if shape.fan_in is None:
                params[path] = np.zeros(shape.shape, dtype=dtype)
            else:
                bound = np.sqrt(6.0 / (shape.fan_in + shape.fan_out))
                params[path] = rng.uniform(-bound, bound, size=shape.shape).astype(dtype)
        return params

    def zero_params(self, dtype=np.float64) -> NetworkParams:
        return NetworkParams({path: np.zeros(s.shape, dtype=dtype) for path, s in self.param_shapes().items()})

    def build(self, graph: Graph, params: Mapping[str, np.ndarray], x: int,
              state: Optional[RecurrentState] = None) -> Tuple[int, RecurrentState]:
        """Record the network on an existing graph, starting from node ``x``."""
        width = graph.value(x).shape[-1]
        if width != self.input_dim:
            raise ShapeMismatchError(f"Network '{self.name}' expects input width {self.input_dim}, got {width}")
        state = state.copy() if state is not None else RecurrentState()
        ctx = LayerContext(graph, params, self.prefix, state.hidden)
        node = x
        for layer, in_dim in zip(self.layers, self.widths()):
            layer.check_input(in_dim, graph.value(node).shape[-1])
            node = layer.build(ctx, node)
        return node, state


def forward(
    params: Mapping[str, np.ndarray],
    spec: NetworkSpec,
    x: np.ndarray,
    state: Optional[RecurrentState] = None,
) -> Tuple[np.ndarray, RecurrentState, Graph]:
    """
    Run a network over a (frames, input_dim) input.

    :return: (output, new recurrent state, recorded graph); the graph's last
        node is the output and ``graph.replay(params)`` reproduces it
    """
    x = np.asarray(x)
    if x.ndim != 2:
        raise ShapeMismatchError(f"Network '{spec.name}' expects a 2-D (frames, features) input, got {x.shape}")
    dtype = params.dtype if isinstance(params, NetworkParams) else np.float64
    graph = Graph(dtype)
    output, new_state = spec.build(graph, params, graph.const(x), state)
    return graph.value(output), new_state, graph


LossBuilder = Callable[[NetworkParams], Tuple[Graph, int]]


def numerical_gradients(build: LossBuilder, params: NetworkParams, step: float = 1e-5) -> Dict[str, np.ndarray]:
    """Central finite differences of a loss, replaying one recorded graph."""
    graph, loss = build(params)
    numeric: Dict[str, np.ndarray] = {}
    for name, value in params.items():
        grad = np.zeros_like(value, dtype=np.float64)
        for idx in np.ndindex(value.shape):
            shifted = params.copy()
            original = float(value[idx])
            shifted[name][idx] = original + step
            upper = float(graph.replay(shifted).value(loss))
            shifted[name][idx] = original - step
            lower = float(graph.replay(shifted).value(loss))
            grad[idx] = (upper - lower) / (2.0 * step)
        numeric[name] = grad
    return numeric


def gradient_check(build: LossBuilder, params: NetworkParams, step: float = 1e-5) -> Dict[str, float]:
    """
    Relative error of reverse-mode gradients against central differences.

    The error of each parameter tensor is ||a - n|| / max(||a|| + ||n||, 1e-12).
    Use 64-bit parameters.
    """
    params = params.astype(np.float64)
    graph, loss = build(params)
    analytic = gradients(graph, loss, params)
    numeric = numerical_gradients(build, params, step)
    errors = {}
    for name in params:
        diff = np.linalg.norm(analytic[name] - numeric[name])
        scale = np.linalg.norm(analytic[name]) + np.linalg.norm(numeric[name])
        errors[name] = float(diff / max(scale, 1e-12))
    logger.debug(f"Gradient check: max relative error {max(errors.values(), default=0.0):.3e}")
    return errors
