"""
Layer specifications.

Each specification is a pydantic model tagged by ``kind``; it declares the
parameter shapes it needs for a given input width and records its forward
computation on a Graph. Specs serialize to JSON, which is how checkpoints store
architectures.
"""
from typing import Annotated, Dict, List, Literal, NamedTuple, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field

from intonation_vc.errors import ShapeMismatchError

from .graph import Graph

Activation = Literal["linear", "tanh", "sigmoid", "relu", "softplus"]


class ParamShape(NamedTuple):
    """Shape of one parameter plus its Glorot fan sizes (no fans for biases)."""

    shape: Tuple[int, ...]
    fan_in: Optional[int] = None
    fan_out: Optional[int] = None


class LayerContext:
    """What a layer needs while recording: the graph, parameter values and state."""

    def __init__(self, graph: Graph, params, prefix: str, state: Dict[str, np.ndarray]):
        self.graph = graph
        self.params = params
        self.prefix = prefix
        self.state = state

    def param(self, layer: "BaseLayer", name: str) -> int:
        path = f"{self.prefix}{layer.name}.{name}"
        if path not in self.params:
            raise KeyError(f"Missing parameter '{path}'")
        return self.graph.param(path, self.params[path])


def _activate(g: Graph, node: int, activation: str) -> int:
    return node if activation == "linear" else g.op(activation, node)


def _dense(ctx: LayerContext, layer: "BaseLayer", x: int, weight: str = "W", bias: str = "b") -> int:
    g = ctx.graph
    return g.op("add", g.op("matmul", x, ctx.param(layer, weight)), ctx.param(layer, bias))


class BaseLayer(BaseModel):
    name: str = Field(description="Parameter path segment of this layer")

    def param_shapes(self, in_dim: int) -> Dict[str, ParamShape]:
        return {}

    def output_dim(self, in_dim: int) -> int:
        return in_dim

    def check_input(self, in_dim: int, width: int) -> None:
        if width != in_dim:
            raise ShapeMismatchError(f"Layer '{self.name}' ({self.kind}) expects width {in_dim}, got {width}")

    def build(self, ctx: LayerContext, x: int) -> int:
        raise NotImplementedError


class DenseLayer(BaseLayer):
    kind: Literal["dense"] = "dense"
    units: int = Field(ge=1)
    activation: Activation = "linear"

    def param_shapes(self, in_dim):
        return {"W": ParamShape((in_dim, self.units), in_dim, self.units), "b": ParamShape((self.units,))}

    def output_dim(self, in_dim):
        return self.units

    def build(self, ctx, x):
        return _activate(ctx.graph, _dense(ctx, self, x), self.activation)


class SoftmaxLayer(DenseLayer):
    """Dense projection to class logits followed by a row softmax."""

    kind: Literal["softmax"] = "softmax"  # type: ignore[assignment]

    def build(self, ctx, x):
        return ctx.graph.op("softmax", _dense(ctx, self, x), axis=-1)


class MaskedDenseLayer(BaseLayer):
    """
    Autoregressive dense map producing ``blocks`` outputs per input coordinate.

    Output i of every block sees input j only when j < i, or j > i when
    ``reverse`` is set. With all-zero parameters every output is zero.
    """

    kind: Literal["masked_dense"] = "masked_dense"
    blocks: int = Field(default=2, ge=1)
    reverse: bool = False

    def mask(self, in_dim: int) -> np.ndarray:
        single = np.tril(np.ones((in_dim, in_dim)), k=-1).T
        if self.reverse:
            single = single.T
        return np.tile(single, (1, self.blocks))

    def param_shapes(self, in_dim):
        width = self.blocks * in_dim
        return {"W": ParamShape((in_dim, width), in_dim, width), "b": ParamShape((width,))}

    def output_dim(self, in_dim):
        return self.blocks * in_dim

    def build(self, ctx, x):
        g = ctx.graph
        in_dim = g.value(x).shape[-1]
        masked = g.op("mul", ctx.param(self, "W"), g.const(self.mask(in_dim)))
        return g.op("add", g.op("matmul", x, masked), ctx.param(self, "b"))


def _gru_shapes(in_dim: int, units: int) -> Dict[str, ParamShape]:
    return {
        "W": ParamShape((in_dim, 3 * units), in_dim, 3 * units),
        "U": ParamShape((units, 3 * units), units, 3 * units),
        "b": ParamShape((3 * units,)),
    }


def _gru_scan(ctx: LayerContext, layer: BaseLayer, x: int, units: int, state_key: str, reverse: bool) -> int:
    """Run a gated-recurrent cell over all frames; returns the (T, units) hidden sequence."""
    g = ctx.graph
    steps = g.value(x).shape[0]
    projected = _dense(ctx, layer, x)  # input projection of every frame at once
    recurrent = ctx.param(layer, "U")
    initial = ctx.state.get(state_key)
    hidden = g.const(np.zeros((1, units)) if initial is None else np.reshape(initial, (1, units)))

    outputs: List[int] = [0] * steps
    order = range(steps - 1, -1, -1) if reverse else range(steps)
    for t in order:
        x_t = g.op("slice", projected, key=(slice(t, t + 1), slice(None)))
        h_t = g.op("matmul", hidden, recurrent)
        reset = g.op("sigmoid", g.op("add", g.op("slice", x_t, key=(slice(None), slice(0, units))),
                                     g.op("slice", h_t, key=(slice(None), slice(0, units)))))
        update = g.op("sigmoid", g.op("add", g.op("slice", x_t, key=(slice(None), slice(units, 2 * units))),
                                      g.op("slice", h_t, key=(slice(None), slice(units, 2 * units)))))
        candidate = g.op("tanh", g.op(
            "add",
            g.op("slice", x_t, key=(slice(None), slice(2 * units, 3 * units))),
            g.op("mul", reset, g.op("slice", h_t, key=(slice(None), slice(2 * units, 3 * units)))),
        ))
        # h' = (1 - u) * n + u * h  ==  n + u * (h - n)
        hidden = g.op("add", candidate, g.op("mul", update, g.op("sub", hidden, candidate)))
        outputs[t] = hidden
    ctx.state[state_key] = g.value(hidden).reshape(-1).copy()
    return outputs[0] if steps == 1 else g.op("concat", *outputs, axis=0)


class GRULayer(BaseLayer):
    """Unidirectional gated-recurrent layer returning the hidden state of every frame."""

    kind: Literal["gru"] = "gru"
    units: int = Field(ge=1)
    reverse: bool = False

    def param_shapes(self, in_dim):
        return _gru_shapes(in_dim, self.units)

    def output_dim(self, in_dim):
        return self.units

    def build(self, ctx, x):
        return _gru_scan(ctx, self, x, self.units, self.name, self.reverse)


class BiGRULayer(BaseLayer):
    """Forward and backward gated-recurrent layers concatenated per frame."""

    kind: Literal["bigru"] = "bigru"
    units: int = Field(ge=1, description="Units per direction")

    def _direction(self, suffix: str) -> GRULayer:
        return GRULayer(name=f"{self.name}.{suffix}", units=self.units, reverse=suffix == "bw")

    def param_shapes(self, in_dim):
        shapes = {}
        for suffix in ("fw", "bw"):
            shapes.update({f"{suffix}.{k}": v for k, v in _gru_shapes(in_dim, self.units).items()})
        return shapes

    def output_dim(self, in_dim):
        return 2 * self.units

    def build(self, ctx, x):
        forward = self._direction("fw").build(ctx, x)
        backward = self._direction("bw").build(ctx, x)
        return ctx.graph.op("concat", forward, backward, axis=1)


class Conv1dLayer(BaseLayer):
    kind: Literal["conv1d"] = "conv1d"
    channels: int = Field(ge=1)
    kernel: int = Field(ge=1)
    activation: Activation = "linear"

    def param_shapes(self, in_dim):
        return {
            "W": ParamShape((self.kernel, in_dim, self.channels), self.kernel * in_dim, self.kernel * self.channels),
            "b": ParamShape((self.channels,)),
        }

    def output_dim(self, in_dim):
        return self.channels

    def build(self, ctx, x):
        g = ctx.graph
        conv = g.op("add", g.op("conv1d", x, ctx.param(self, "W")), ctx.param(self, "b"))
        return _activate(g, conv, self.activation)


class ConvBankLayer(BaseLayer):
    """Convolutions of widths 1..max_kernel stacked along the channel axis."""

    kind: Literal["conv_bank"] = "conv_bank"
    channels: int = Field(ge=1, description="Channels per kernel width")
    max_kernel: int = Field(ge=1)
    activation: Activation = "relu"

    def _member(self, k: int) -> Conv1dLayer:
        return Conv1dLayer(name=f"{self.name}.k{k}", channels=self.channels, kernel=k, activation=self.activation)

    def param_shapes(self, in_dim):
        shapes = {}
        for k in range(1, self.max_kernel + 1):
            shapes.update({f"k{k}.{n}": s for n, s in self._member(k).param_shapes(in_dim).items()})
        return shapes

    def output_dim(self, in_dim):
        return self.channels * self.max_kernel

    def build(self, ctx, x):
        outputs = [self._member(k).build(ctx, x) for k in range(1, self.max_kernel + 1)]
        return outputs[0] if len(outputs) == 1 else ctx.graph.op("concat", *outputs, axis=1)


class MaxPool1dLayer(BaseLayer):
    kind: Literal["max_pool1d"] = "max_pool1d"
    width: int = Field(default=2, ge=1)

    def build(self, ctx, x):
        return ctx.graph.op("max_pool1d", x, width=self.width)


class HighwayLayer(BaseLayer):
    """y = T * relu(x W_h + b_h) + (1 - T) * x with gate T = sigmoid(x W_t + b_t)."""

    kind: Literal["highway"] = "highway"

    def param_shapes(self, in_dim):
        return {
            "W_h": ParamShape((in_dim, in_dim), in_dim, in_dim),
            "b_h": ParamShape((in_dim,)),
            "W_t": ParamShape((in_dim, in_dim), in_dim, in_dim),
            "b_t": ParamShape((in_dim,)),
        }

    def build(self, ctx, x):
        g = ctx.graph
        transform = g.op("relu", _dense(ctx, self, x, "W_h", "b_h"))
        gate = g.op("sigmoid", _dense(ctx, self, x, "W_t", "b_t"))
        return g.op("add", x, g.op("mul", gate, g.op("sub", transform, x)))


LayerSpec = Annotated[
    Union[
        DenseLayer,
        SoftmaxLayer,
        MaskedDenseLayer,
        GRULayer,
        BiGRULayer,
        Conv1dLayer,
        ConvBankLayer,
        MaxPool1dLayer,
        HighwayLayer,
    ],
    Field(discriminator="kind"),
]
