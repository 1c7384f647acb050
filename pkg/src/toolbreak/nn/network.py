"""Sequential layer container with named parameter access."""

from __future__ import annotations

import numpy as np

from .layers import Dropout, Layer, SoftmaxCrossEntropy


class Network:
    """An ordered layer stack producing class logits.

    Parameter, gradient, and buffer dictionaries are keyed
    ``<layer-name>.<local-name>`` and expose the live arrays, so
    optimizers mutate the network in place.
    """

    def __init__(self, layers: list[Layer]):
        names = [layer.name for layer in layers]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate layer names: {names}")
        self.layers = layers
        self.head = SoftmaxCrossEntropy()

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        for layer in self.layers:
            x = layer.forward(x, train=train)
        return x

    def backward(self, grad_logits: np.ndarray) -> np.ndarray:
        grad = grad_logits
        for layer in reversed(self.layers):
            grad = layer.backward(grad)
        return grad

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        return self.head.probabilities(self.forward(x, train=False))

    def parameters(self) -> dict[str, np.ndarray]:
        return {f"{layer.name}.{k}": v for layer in self.layers for k, v in layer.params().items()}

    def gradients(self) -> dict[str, np.ndarray]:
        return {f"{layer.name}.{k}": v for layer in self.layers for k, v in layer.grads().items()}

    def buffers(self) -> dict[str, np.ndarray]:
        return {f"{layer.name}.{k}": v for layer in self.layers for k, v in layer.buffers().items()}

    def load_parameters(self, values: dict[str, np.ndarray]) -> None:
        live = self.parameters()
        for key, arr in values.items():
            if key not in live:
                raise ValueError(f"unknown parameter {key!r}")
            if live[key].shape != arr.shape:
                raise ValueError(f"parameter {key!r}: shape {arr.shape} mismatches {live[key].shape}")
            live[key][...] = arr

    def load_buffers(self, values: dict[str, np.ndarray]) -> None:
        live = self.buffers()
        for key, arr in values.items():
            if key not in live:
                raise ValueError(f"unknown buffer {key!r}")
            live[key][...] = arr

    def set_dropout_rng(self, rng: np.random.Generator) -> None:
        for layer in self.layers:
            if isinstance(layer, Dropout):
                layer.rng = rng

    def parameter_count(self) -> int:
        return sum(p.size for p in self.parameters().values())
