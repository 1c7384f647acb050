"""Central-difference validation of every analytic gradient.

For each layer kind a small random configuration is built, a scalar
objective J = sum(forward(x) * G) is formed with a fixed random G, and
every parameter and input entry is perturbed by +-h. The worst relative
error against the analytic backward pass is returned.

Non-differentiable points are excluded: relu entries within 10h of zero
and max-pool pairs that nearly tie would flip branches under the
perturbation and say nothing about the gradient code.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .layers import (
    BatchNorm1d,
    Conv1d,
    Dense,
    Dropout,
    Flatten,
    MaxPool1d,
    Relu,
    SoftmaxCrossEntropy,
)
from .network import Network

H = 1e-5
_REL_FLOOR = 1e-2

KINDS = ("conv1d", "dense", "relu", "maxpool1d", "batchnorm", "dropout",
         "softmax_xent", "micro_cnn")


def relative_error(analytic: np.ndarray, numeric: np.ndarray,
                   skip: np.ndarray | None = None) -> float:
    err = np.abs(analytic - numeric) / np.maximum(np.abs(analytic) + np.abs(numeric), _REL_FLOOR)
    if skip is not None:
        err = np.where(skip, 0.0, err)
    return float(err.max()) if err.size else 0.0


def numeric_gradient(objective: Callable[[], float], arr: np.ndarray, h: float = H) -> np.ndarray:
    """Central differences of a scalar objective w.r.t. an array mutated in place."""
    grad = np.zeros_like(arr)
    flat, gflat = arr.ravel(), grad.ravel()
    for i in range(flat.size):
        original = flat[i]
        flat[i] = original + h
        plus = objective()
        flat[i] = original - h
        minus = objective()
        flat[i] = original
        gflat[i] = (plus - minus) / (2 * h)
    return grad


def _check_layer(layer, x: np.ndarray, rng: np.random.Generator,
                 train: bool = False, skip_input: np.ndarray | None = None) -> float:
    upstream = rng.standard_normal(layer.forward(x, train=train).shape)

    def objective() -> float:
        if isinstance(layer, Dropout):
            layer.rng = np.random.default_rng(1234)
        return float((layer.forward(x, train=train) * upstream).sum())

    objective()
    analytic_input = layer.backward(upstream)
    analytic_params = {k: v.copy() for k, v in layer.grads().items()}

    worst = relative_error(analytic_input, numeric_gradient(objective, x), skip_input)
    for key, param in layer.params().items():
        worst = max(worst, relative_error(analytic_params[key], numeric_gradient(objective, param)))
    return worst


def _init_gaussian(arrays: list[np.ndarray], rng: np.random.Generator, scale: float = 0.3) -> None:
    for arr in arrays:
        arr[...] = rng.standard_normal(arr.shape) * scale


def _check_conv1d(rng: np.random.Generator) -> float:
    worst = 0.0
    for stride, padding in ((1, "same"), (2, "valid")):
        layer = Conv1d("conv", kernel_size=5, in_channels=3, out_channels=4,
                       stride=stride, padding=padding)
        _init_gaussian([layer.w, layer.b], rng)
        x = rng.standard_normal((2, 16, 3))
        worst = max(worst, _check_layer(layer, x, rng))
    return worst


def _check_dense(rng: np.random.Generator) -> float:
    layer = Dense("fc", 16, 4)
    _init_gaussian([layer.w, layer.b], rng)
    return _check_layer(layer, rng.standard_normal((8, 16)), rng)


def _check_relu(rng: np.random.Generator) -> float:
    x = rng.standard_normal((4, 12, 3))
    skip = np.abs(x) < 10 * H
    return _check_layer(Relu("relu"), x, rng, skip_input=skip)


def _check_maxpool(rng: np.random.Generator) -> float:
    worst = 0.0
    for length in (12, 15):
        x = rng.standard_normal((3, length, 2))
        skip = np.zeros_like(x, dtype=bool)
        padded = np.concatenate([x, np.full((3, 1, 2), -np.inf)], axis=1) if length % 2 else x
        pairs = padded.reshape(3, -1, 2, 2)
        near_tie = np.abs(pairs[:, :, 0, :] - pairs[:, :, 1, :]) < 10 * H
        skip_pairs = np.repeat(near_tie[:, :, None, :], 2, axis=2).reshape(3, -1, 2)
        skip |= skip_pairs[:, :length, :]
        worst = max(worst, _check_layer(MaxPool1d("pool"), x, rng, skip_input=skip))
    return worst


def _check_batchnorm(rng: np.random.Generator) -> float:
    layer = BatchNorm1d("bn", channels=4)
    layer.gamma[...] = rng.standard_normal(4) * 0.5 + 1.0
    layer.beta[...] = rng.standard_normal(4) * 0.3
    return _check_layer(layer, rng.standard_normal((3, 6, 4)), rng, train=True)


def _check_dropout(rng: np.random.Generator) -> float:
    layer = Dropout("drop", rate=0.4, rng=np.random.default_rng(1234))
    return _check_layer(layer, rng.standard_normal((4, 10, 2)), rng, train=True)


def _check_softmax_xent(rng: np.random.Generator) -> float:
    logits = rng.standard_normal((4, 2))
    labels = rng.integers(0, 2, size=4)
    _, analytic = SoftmaxCrossEntropy.loss_and_grad(logits, labels)
    numeric = numeric_gradient(
        lambda: SoftmaxCrossEntropy.loss_and_grad(logits, labels)[0], logits)
    return relative_error(analytic, numeric)


def micro_cnn(input_length: int = 16, filters: tuple[int, int, int] = (2, 2, 2),
              dense_width: int = 4, dropout_rate: float = 0.5) -> Network:
    """Five-layer convolutional stack small enough to difference exhaustively."""
    f1, f2, f3 = filters
    return Network([
        Conv1d("conv1", 5, 1, f1), BatchNorm1d("bn1", f1), Relu("relu1"), MaxPool1d("pool1"),
        Conv1d("conv2", 5, f1, f2), BatchNorm1d("bn2", f2), Relu("relu2"), MaxPool1d("pool2"),
        Conv1d("conv3", 5, f2, f3), BatchNorm1d("bn3", f3), Relu("relu3"), MaxPool1d("pool3"),
        Dropout("drop", dropout_rate),
        Flatten("flatten"),
        Dense("fc1", (input_length // 8) * f3, dense_width), Relu("relu4"),
        Dense("fc2", dense_width, 2),
    ])


def _check_micro_cnn(rng: np.random.Generator) -> float:
    net = micro_cnn()
    for arr in net.parameters().values():
        arr[...] = rng.standard_normal(arr.shape) * 0.4
    for layer in net.layers:
        if isinstance(layer, BatchNorm1d):
            layer.gamma[...] = 1.0 + 0.2 * rng.standard_normal(layer.gamma.shape)
    x = rng.standard_normal((3, 16, 1))
    labels = rng.integers(0, 2, size=3)

    def objective() -> float:
        net.set_dropout_rng(np.random.default_rng(77))
        logits = net.forward(x, train=True)
        return SoftmaxCrossEntropy.loss_and_grad(logits, labels)[0]

    objective()
    net.set_dropout_rng(np.random.default_rng(77))
    logits = net.forward(x, train=True)
    _, dlogits = SoftmaxCrossEntropy.loss_and_grad(logits, labels)
    net.backward(dlogits)
    analytic = {k: v.copy() for k, v in net.gradients().items()}

    worst = 0.0
    for key, param in net.parameters().items():
        worst = max(worst, relative_error(analytic[key], numeric_gradient(objective, param)))
    return worst


_CHECKS = {
    "conv1d": _check_conv1d,
    "dense": _check_dense,
    "relu": _check_relu,
    "maxpool1d": _check_maxpool,
    "batchnorm": _check_batchnorm,
    "dropout": _check_dropout,
    "softmax_xent": _check_softmax_xent,
    "micro_cnn": _check_micro_cnn,
}


def grad_check(kind: str, seed: int = 0) -> float:
    """Worst relative error between analytic and central-difference gradients."""
    if kind not in _CHECKS:
        raise ValueError(f"unknown grad_check kind {kind!r}; known: {sorted(_CHECKS)}")
    return _CHECKS[kind](np.random.default_rng(seed))
