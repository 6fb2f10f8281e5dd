"""Inverse autoregressive flow posterior."""
from .iaf import (
    FlowSpec,
    FlowStepParams,
    FlowTrace,
    flow_steps,
    iaf_chain,
    iaf_chain_node,
    iaf_inverse,
    iaf_loss,
    iaf_step,
    invert_step,
    kl_estimate,
    log_density,
)

__all__ = [
    "FlowSpec",
    "FlowStepParams",
    "FlowTrace",
    "flow_steps",
    "iaf_step",
    "iaf_chain",
    "iaf_chain_node",
    "iaf_inverse",
    "invert_step",
    "iaf_loss",
    "kl_estimate",
    "log_density",
]
