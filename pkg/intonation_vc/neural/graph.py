"""
Reverse-mode differentiation over a recorded tape of array operations.

A Graph records every node in evaluation order, so parents always precede
their children. Parameter leaves carry a name; ``gradients`` walks the tape
backwards and returns one gradient array per named parameter.
"""
import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Mapping, Optional, Tuple, Type

import numpy as np

from intonation_vc.errors import NonScalarLossError, ShapeMismatchError

logger = logging.getLogger(__name__)


class Op:
    """One differentiable operation: ``forward`` computes, ``backward`` pulls gradients back."""

    name: str = ""

    def forward(self, *inputs: np.ndarray, **attrs: Any) -> np.ndarray:
        raise NotImplementedError

    def backward(self, grad: np.ndarray, out: np.ndarray, *inputs: np.ndarray, **attrs: Any) -> Tuple:
        raise NotImplementedError


class OpRegistry:
    """Registry of the operation vocabulary the tape understands."""

    _ops: Dict[str, Op] = {}

    @classmethod
    def register(cls, name: str, op_class: Type[Op]) -> None:
        op = op_class()
        op.name = name
        cls._ops[name] = op

    @classmethod
    def get(cls, name: str) -> Op:
        if name not in cls._ops:
            raise KeyError(f"Unknown graph op '{name}'. Available: {', '.join(sorted(cls._ops))}")
        return cls._ops[name]

    @classmethod
    def names(cls) -> List[str]:
        return sorted(cls._ops)


def register_op(name: str) -> Callable[[Type[Op]], Type[Op]]:
    """Decorator to register an op class under ``name``."""
    def decorator(cls: Type[Op]) -> Type[Op]:
        OpRegistry.register(name, cls)
        return cls
    return decorator


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sum ``grad`` down to ``shape`` after numpy broadcasting."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad.reshape(shape)


@register_op("matmul")
class MatMul(Op):
    def forward(self, a, b):
        if a.shape[-1] != b.shape[0]:
            raise ShapeMismatchError(f"matmul operands {a.shape} and {b.shape} do not align")
        return a @ b

    def backward(self, grad, out, a, b):
        return grad @ b.T, a.T @ grad


@register_op("add")
class Add(Op):
    def forward(self, a, b):
        return a + b

    def backward(self, grad, out, a, b):
        return _unbroadcast(grad, a.shape), _unbroadcast(grad, b.shape)


@register_op("sub")
class Sub(Op):
    def forward(self, a, b):
        return a - b

    def backward(self, grad, out, a, b):
        return _unbroadcast(grad, a.shape), _unbroadcast(-grad, b.shape)


@register_op("mul")
class Mul(Op):
    def forward(self, a, b):
        return a * b

    def backward(self, grad, out, a, b):
        return _unbroadcast(grad * b, a.shape), _unbroadcast(grad * a, b.shape)


@register_op("scale")
class Scale(Op):
    def forward(self, a, factor=1.0):
        return a * factor

    def backward(self, grad, out, a, factor=1.0):
        return (grad * factor,)


@register_op("tanh")
class Tanh(Op):
    def forward(self, a):
        return np.tanh(a)

    def backward(self, grad, out, a):
        return (grad * (1.0 - out * out),)


@register_op("sigmoid")
class Sigmoid(Op):
    def forward(self, a):
        # tanh form avoids overflow warnings for large |a|
        return 0.5 * (np.tanh(0.5 * a) + 1.0)

    def backward(self, grad, out, a):
        return (grad * out * (1.0 - out),)


@register_op("relu")
class Relu(Op):
    def forward(self, a):
        return np.maximum(a, 0)

    def backward(self, grad, out, a):
        return (grad * (a > 0),)


@register_op("softplus")
class Softplus(Op):
    def forward(self, a):
        return np.logaddexp(0.0, a)

    def backward(self, grad, out, a):
        return (grad * 0.5 * (np.tanh(0.5 * a) + 1.0),)


@register_op("exp")
class Exp(Op):
    def forward(self, a):
        return np.exp(a)

    def backward(self, grad, out, a):
        return (grad * out,)


@register_op("log")
class Log(Op):
    def forward(self, a):
        return np.log(a)

    def backward(self, grad, out, a):
        return (grad / a,)


@register_op("clip")
class Clip(Op):
    def forward(self, a, low=-np.inf, high=np.inf):
        return np.clip(a, low, high)

    def backward(self, grad, out, a, low=-np.inf, high=np.inf):
        return (grad * ((a >= low) & (a <= high)),)


@register_op("square")
class Square(Op):
    def forward(self, a):
        return a * a

    def backward(self, grad, out, a):
        return (2.0 * grad * a,)


@register_op("softmax")
class Softmax(Op):
    def forward(self, a, axis=-1):
        shifted = np.exp(a - a.max(axis=axis, keepdims=True))
        return shifted / shifted.sum(axis=axis, keepdims=True)

    def backward(self, grad, out, a, axis=-1):
        return (out * (grad - np.sum(grad * out, axis=axis, keepdims=True)),)


@register_op("sum")
class Sum(Op):
    def forward(self, a, axis=None):
        return np.sum(a, axis=axis)

    def backward(self, grad, out, a, axis=None):
        if axis is not None:
            grad = np.expand_dims(grad, axis)
        return (np.broadcast_to(grad, a.shape).copy(),)


@register_op("mean")
class Mean(Op):
    def forward(self, a, axis=None):
        return np.mean(a, axis=axis)

    def backward(self, grad, out, a, axis=None):
        count = a.size if axis is None else a.shape[axis]
        if axis is not None:
            grad = np.expand_dims(grad, axis)
        return (np.broadcast_to(grad / count, a.shape).copy(),)


@register_op("reshape")
class Reshape(Op):
    def forward(self, a, shape=()):
        return a.reshape(shape)

    def backward(self, grad, out, a, shape=()):
        return (grad.reshape(a.shape),)


@register_op("broadcast_rows")
class BroadcastRows(Op):
    """Repeat a single row vector ``rows`` times."""

    def forward(self, a, rows=1):
        return np.broadcast_to(a.reshape(1, -1), (rows, a.size)).copy()

    def backward(self, grad, out, a, rows=1):
        return (grad.sum(axis=0).reshape(a.shape),)


@register_op("concat")
class Concat(Op):
    def forward(self, *parts, axis=-1):
        return np.concatenate(parts, axis=axis)

    def backward(self, grad, out, *parts, axis=-1):
        bounds = np.cumsum([p.shape[axis] for p in parts])[:-1]
        return tuple(np.split(grad, bounds, axis=axis))


@register_op("slice")
class Slice(Op):
    """Basic indexing with a tuple of slices (index arrays are not supported)."""

    def forward(self, a, key=()):
        return a[key].copy()

    def backward(self, grad, out, a, key=()):
        full = np.zeros_like(a)
        full[key] = grad
        return (full,)


def _same_padding(kernel: int) -> Tuple[int, int]:
    left = (kernel - 1) // 2
    return left, kernel - 1 - left


@register_op("conv1d")
class Conv1d(Op):
    """Same-padded 1-D convolution: x (T, Cin), w (k, Cin, Cout) -> (T, Cout)."""

    def forward(self, x, w):
        kernel, cin, _ = w.shape
        if x.shape[1] != cin:
            raise ShapeMismatchError(f"conv1d input has {x.shape[1]} channels, kernel expects {cin}")
        left, right = _same_padding(kernel)
        padded = np.pad(x, ((left, right), (0, 0)))
        steps = x.shape[0]
        return sum(padded[j:j + steps] @ w[j] for j in range(kernel))

    def backward(self, grad, out, x, w):
        kernel = w.shape[0]
        left, right = _same_padding(kernel)
        padded = np.pad(x, ((left, right), (0, 0)))
        steps = x.shape[0]
        grad_padded = np.zeros_like(padded)
        grad_w = np.zeros_like(w)
        for j in range(kernel):
            grad_padded[j:j + steps] += grad @ w[j].T
            grad_w[j] = padded[j:j + steps].T @ grad
        return grad_padded[left:left + steps], grad_w


@register_op("max_pool1d")
class MaxPool1d(Op):
    """Max over ``width`` consecutive frames with stride 1; the frame count is kept."""

    def forward(self, x, width=2):
        padded = np.pad(x, ((0, width - 1), (0, 0)), constant_values=-np.inf)
        return np.max(np.stack([padded[j:j + x.shape[0]] for j in range(width)]), axis=0)

    def backward(self, grad, out, x, width=2):
        steps = x.shape[0]
        padded = np.pad(x, ((0, width - 1), (0, 0)), constant_values=-np.inf)
        winner = np.argmax(np.stack([padded[j:j + steps] for j in range(width)]), axis=0)
        grad_padded = np.zeros(padded.shape, dtype=grad.dtype)
        columns = np.arange(x.shape[1])
        for t in range(steps):
            np.add.at(grad_padded, (t + winner[t], columns), grad[t])
        return (grad_padded[:steps],)


@dataclass
class Node:
    """One recorded value: a parameter leaf, a constant, or an op application."""

    index: int
    op: Optional[str]
    value: np.ndarray
    parents: Tuple[int, ...] = ()
    attrs: Dict[str, Any] = field(default_factory=dict)
    param_name: Optional[str] = None

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(self.value.shape)


class Graph:
    """
    Append-only tape of nodes.

    Parameters are added once per name and shared by every use, so recurrent
    layers accumulate their gradients across time steps.
    """

    def __init__(self, dtype: Any = np.float64):
        self.dtype = np.dtype(dtype)
        self.nodes: List[Node] = []
        self._params: Dict[str, int] = {}

    def __len__(self) -> int:
        return len(self.nodes)

    def _append(self, op, value, parents=(), attrs=None, param_name=None) -> int:
        index = len(self.nodes)
        self.nodes.append(Node(index, op, value, tuple(parents), dict(attrs or {}), param_name))
        return index

    def param(self, name: str, value: np.ndarray) -> int:
        """Leaf node for a named parameter (reused when the name was seen before)."""
        if name not in self._params:
            self._params[name] = self._append(None, np.asarray(value, dtype=self.dtype), param_name=name)
        return self._params[name]

    def const(self, value: Any) -> int:
        """Leaf node holding a constant that receives no gradient."""
        return self._append(None, np.asarray(value, dtype=self.dtype))

    def op(self, name: str, *inputs: int, **attrs: Any) -> int:
        """Apply a registered op to earlier nodes and record the result."""
        values = [self.nodes[i].value for i in inputs]
        result = OpRegistry.get(name).forward(*values, **attrs)
        return self._append(name, np.asarray(result, dtype=self.dtype), inputs, attrs)

    def value(self, index: int) -> np.ndarray:
        return self.nodes[index].value

    @property
    def param_names(self) -> List[str]:
        return sorted(self._params)

    def replay(self, params: Mapping[str, np.ndarray]) -> "Graph":
        """
        Re-evaluate the tape with other parameter values.

        Parameters missing from ``params`` keep their recorded values; constants
        and the op sequence are reused as recorded.
        """
        replayed = Graph(self.dtype)
        for node in self.nodes:
            if node.op is None:
                value = node.value
                if node.param_name is not None and node.param_name in params:
                    value = np.asarray(params[node.param_name], dtype=self.dtype)
                replayed._append(None, value, param_name=node.param_name)
                if node.param_name is not None:
                    replayed._params[node.param_name] = node.index
            else:
                values = [replayed.nodes[i].value for i in node.parents]
                result = OpRegistry.get(node.op).forward(*values, **node.attrs)
                replayed._append(node.op, np.asarray(result, dtype=self.dtype), node.parents, node.attrs)
        return replayed


def gradients(graph: Graph, loss: int, params: Optional[Mapping[str, np.ndarray]] = None) -> Dict[str, np.ndarray]:
    """
    Exact reverse-mode gradients of a scalar node.

    :param graph: Recorded tape
    :param loss: Index of the scalar loss node
    :param params: Optional full parameter map; names absent from the graph get
        exact zero gradients so the result has the same keys
    :return: Mapping of parameter name to gradient array
    """
    loss_value = graph.value(loss)
    if loss_value.size != 1:
        raise NonScalarLossError(f"Loss node {loss} has shape {loss_value.shape}; gradients need a scalar")

    adjoints: Dict[int, np.ndarray] = {loss: np.ones_like(loss_value)}
    for node in reversed(graph.nodes[:loss + 1]):
        grad = adjoints.pop(node.index, None)
        if grad is None or node.op is None:
            if grad is not None and node.param_name is not None:
                adjoints[node.index] = grad
            continue
        inputs = [graph.nodes[i].value for i in node.parents]
        parent_grads = OpRegistry.get(node.op).backward(grad, node.value, *inputs, **node.attrs)
        for parent, parent_grad in zip(node.parents, parent_grads):
            if parent in adjoints:
                adjoints[parent] = adjoints[parent] + parent_grad
            else:
                adjoints[parent] = parent_grad

    result: Dict[str, np.ndarray] = {}
    for name, index in graph._params.items():
        value = graph.nodes[index].value
        result[name] = np.asarray(adjoints.get(index, np.zeros_like(value)), dtype=graph.dtype).reshape(value.shape)
    if params is not None:
        for name, value in params.items():
            if name not in result:
                result[name] = np.zeros(np.shape(value), dtype=graph.dtype)
    return result
