"""Minimal differentiable-network core on numpy arrays."""
from .graph import Graph, Node, Op, OpRegistry, gradients, register_op
from .layers import (
    BiGRULayer,
    Conv1dLayer,
    ConvBankLayer,
    DenseLayer,
    GRULayer,
    HighwayLayer,
    LayerSpec,
    MaskedDenseLayer,
    MaxPool1dLayer,
    SoftmaxLayer,
)
from .losses import (
    cross_entropy,
    cross_entropy_node,
    gaussian_kl,
    gaussian_kl_node,
    mean_squared_error,
    mean_squared_error_node,
)
from .network import NetworkSpec, RecurrentState, forward, gradient_check, numerical_gradients
from .optim import AdamState, optimizer_step
from .params import NetworkParams

__all__ = [
    "Graph",
    "Node",
    "Op",
    "OpRegistry",
    "register_op",
    "gradients",
    "NetworkParams",
    "NetworkSpec",
    "RecurrentState",
    "LayerSpec",
    "DenseLayer",
    "SoftmaxLayer",
    "MaskedDenseLayer",
    "GRULayer",
    "BiGRULayer",
    "Conv1dLayer",
    "ConvBankLayer",
    "MaxPool1dLayer",
    "HighwayLayer",
    "forward",
    "gradient_check",
    "numerical_gradients",
    "cross_entropy",
    "cross_entropy_node",
    "mean_squared_error",
    "mean_squared_error_node",
    "gaussian_kl",
    "gaussian_kl_node",
    "AdamState",
    "optimizer_step",
]
