from .layers import (
    BatchNorm1d,
    Conv1d,
    Dense,
    Dropout,
    Flatten,
    Layer,
    MaxPool1d,
    Relu,
    SoftmaxCrossEntropy,
)
from .network import Network
from .optim import (
    ADAM_BETA1,
    ADAM_BETA2,
    ADAM_EPSILON,
    OptimizerState,
    adam_step,
    gd_step,
    make_optimizer,
    optimizer_step,
)
from .gradcheck import grad_check

__all__ = [
    "ADAM_BETA1",
    "ADAM_BETA2",
    "ADAM_EPSILON",
    "BatchNorm1d",
    "Conv1d",
    "Dense",
    "Dropout",
    "Flatten",
    "Layer",
    "MaxPool1d",
    "Network",
    "OptimizerState",
    "Relu",
    "SoftmaxCrossEntropy",
    "adam_step",
    "gd_step",
    "grad_check",
    "make_optimizer",
    "optimizer_step",
]
