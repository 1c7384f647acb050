"""Layer forward/backward passes on float64 numpy arrays.

Sequence tensors are (batch, length, channels); dense tensors are
(batch, features). Each layer caches whatever its backward pass needs
during forward, so the calling pattern is strictly
forward -> backward -> read grads.

Double precision is deliberate: it is what makes the finite-difference
gradient checks in nn.gradcheck meaningful.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

BN_EPSILON = 1e-5
BN_MOMENTUM = 0.9


class Layer:
    """Base layer: parameterless identity semantics, no state."""

    def __init__(self, name: str):
        self.name = name

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        raise NotImplementedError

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def params(self) -> dict[str, np.ndarray]:
        return {}

    def grads(self) -> dict[str, np.ndarray]:
        return {}

    def buffers(self) -> dict[str, np.ndarray]:
        return {}


def conv1d_geometry(length: int, kernel_size: int, stride: int, padding: str) -> tuple[int, int, int]:
    """(pad_left, pad_right, out_length) for one conv configuration."""
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    if padding == "same":
        out_length = -(-length // stride)
        total = max(0, (out_length - 1) * stride + kernel_size - length)
        pad_left = total // 2
        return pad_left, total - pad_left, out_length
    if padding == "valid":
        if kernel_size > length:
            raise ValueError(f"kernel {kernel_size} exceeds input length {length}")
        return 0, 0, (length - kernel_size) // stride + 1
    raise ValueError(f"padding must be 'same' or 'valid', got {padding!r}")


class Conv1d(Layer):
    """1-D convolution: out[b,t,o] = sum_{i,c} x_pad[b, t*stride+i, c] * w[i,c,o] + b[o]."""

    def __init__(self, name: str, kernel_size: int, in_channels: int, out_channels: int,
                 stride: int = 1, padding: str = "same"):
        super().__init__(name)
        self.kernel_size = kernel_size
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.stride = stride
        self.padding = padding
        self.w = np.zeros((kernel_size, in_channels, out_channels))
        self.b = np.zeros(out_channels)
        self.gw = np.zeros_like(self.w)
        self.gb = np.zeros_like(self.b)
        self._x_pad: np.ndarray | None = None
        self._windows: np.ndarray | None = None
        self._in_length = 0
        self._pad_left = 0

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        if x.ndim != 3 or x.shape[2] != self.in_channels:
            raise ValueError(f"{self.name}: expected (batch, length, {self.in_channels}), got {x.shape}")
        batch, length, _ = x.shape
        pad_left, pad_right, out_length = conv1d_geometry(length, self.kernel_size, self.stride, self.padding)
        if self.kernel_size > length + pad_left + pad_right:
            raise ValueError(f"{self.name}: kernel {self.kernel_size} exceeds padded length")
        x_pad = np.pad(x, ((0, 0), (pad_left, pad_right), (0, 0))) if (pad_left or pad_right) else x
        # (batch, padded_length - k + 1, channels, k) view; stride applied by slicing
        wins = sliding_window_view(x_pad, self.kernel_size, axis=1)[:, ::self.stride][:, :out_length]
        self._x_pad, self._windows = x_pad, wins
        self._in_length, self._pad_left = length, pad_left
        return np.tensordot(wins, self.w, axes=([3, 2], [0, 1])) + self.b

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        wins, x_pad = self._windows, self._x_pad
        if wins is None or x_pad is None:
            raise RuntimeError(f"{self.name}: backward before forward")
        if grad_out.shape != (x_pad.shape[0], wins.shape[1], self.out_channels):
            raise ValueError(f"{self.name}: upstream grad shape {grad_out.shape} mismatches forward output")
        self.gb = grad_out.sum(axis=(0, 1))
        self.gw = np.tensordot(wins, grad_out, axes=([0, 1], [0, 1])).transpose(1, 0, 2)
        grad_pad = np.zeros_like(x_pad)
        out_length = grad_out.shape[1]
        span = (out_length - 1) * self.stride + 1
        for i in range(self.kernel_size):
            grad_pad[:, i:i + span:self.stride, :] += grad_out @ self.w[i].T
        return grad_pad[:, self._pad_left:self._pad_left + self._in_length, :]

    def params(self) -> dict[str, np.ndarray]:
        return {"w": self.w, "b": self.b}

    def grads(self) -> dict[str, np.ndarray]:
        return {"w": self.gw, "b": self.gb}


class Relu(Layer):
    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        self._mask = x > 0
        return np.where(self._mask, x, 0.0)

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        return grad_out * self._mask


class MaxPool1d(Layer):
    """Pairwise max with stride 2; odd lengths are right-padded with -inf.

    Backward routes each upstream gradient to the argmax position
    (leftmost on ties), zeros elsewhere.
    """

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        if x.ndim != 3:
            raise ValueError(f"{self.name}: expected (batch, length, channels), got {x.shape}")
        batch, length, channels = x.shape
        self._in_length = length
        if length % 2:
            pad = np.full((batch, 1, channels), -np.inf)
            x = np.concatenate([x, pad], axis=1)
        pairs = x.reshape(batch, -1, 2, channels)
        self._argmax = pairs.argmax(axis=2)
        return np.take_along_axis(pairs, self._argmax[:, :, None, :], axis=2)[:, :, 0, :]

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        batch, out_length, channels = grad_out.shape
        if self._argmax.shape != grad_out.shape:
            raise ValueError(f"{self.name}: upstream grad shape {grad_out.shape} mismatches forward output")
        grad_pairs = np.zeros((batch, out_length, 2, channels))
        np.put_along_axis(grad_pairs, self._argmax[:, :, None, :], grad_out[:, :, None, :], axis=2)
        return grad_pairs.reshape(batch, out_length * 2, channels)[:, :self._in_length, :]


class BatchNorm1d(Layer):
    """Per-channel standardization over (batch, length) with learned scale/shift.

    Train mode uses batch statistics and updates the running buffers;
    eval mode uses the running buffers.
    """

    def __init__(self, name: str, channels: int,
                 epsilon: float = BN_EPSILON, momentum: float = BN_MOMENTUM):
        super().__init__(name)
        self.channels = channels
        self.epsilon = epsilon
        self.momentum = momentum
        self.gamma = np.ones(channels)
        self.beta = np.zeros(channels)
        self.running_mean = np.zeros(channels)
        self.running_var = np.ones(channels)
        self.ggamma = np.zeros_like(self.gamma)
        self.gbeta = np.zeros_like(self.beta)

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        if x.ndim != 3 or x.shape[2] != self.channels:
            raise ValueError(f"{self.name}: expected (batch, length, {self.channels}), got {x.shape}")
        if train:
            m = x.shape[0] * x.shape[1]
            if m < 2:
                raise ValueError(f"{self.name}: need >= 2 values per channel in train mode, got {m}")
            mean = x.mean(axis=(0, 1))
            var = x.var(axis=(0, 1))
            self.running_mean = self.momentum * self.running_mean + (1 - self.momentum) * mean
            self.running_var = self.momentum * self.running_var + (1 - self.momentum) * var
        else:
            mean, var = self.running_mean, self.running_var
        self._train = train
        self._inv_std = 1.0 / np.sqrt(var + self.epsilon)
        self._xhat = (x - mean) * self._inv_std
        return self.gamma * self._xhat + self.beta

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        xhat, inv_std = self._xhat, self._inv_std
        if grad_out.shape != xhat.shape:
            raise ValueError(f"{self.name}: upstream grad shape {grad_out.shape} mismatches forward output")
        self.gbeta = grad_out.sum(axis=(0, 1))
        self.ggamma = (grad_out * xhat).sum(axis=(0, 1))
        dxhat = grad_out * self.gamma
        if not self._train:
            return dxhat * inv_std
        m = xhat.shape[0] * xhat.shape[1]
        return (inv_std / m) * (
            m * dxhat - dxhat.sum(axis=(0, 1)) - xhat * (dxhat * xhat).sum(axis=(0, 1))
        )

    def params(self) -> dict[str, np.ndarray]:
        return {"gamma": self.gamma, "beta": self.beta}

    def grads(self) -> dict[str, np.ndarray]:
        return {"gamma": self.ggamma, "beta": self.gbeta}

    def buffers(self) -> dict[str, np.ndarray]:
        return {"running_mean": self.running_mean, "running_var": self.running_var}


class Dropout(Layer):
    """Inverted dropout: survivors are scaled by 1/(1-rate), eval is identity."""

    def __init__(self, name: str, rate: float, rng: np.random.Generator | None = None):
        super().__init__(name)
        if not 0.0 <= rate < 1.0:
            raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
        self.rate = rate
        self.rng = rng
        self._scaled_mask: np.ndarray | None = None

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        if not train or self.rate == 0.0:
            self._scaled_mask = None
            return x
        if self.rng is None:
            raise RuntimeError(f"{self.name}: no rng attached for train-mode dropout")
        keep = self.rng.random(x.shape) >= self.rate
        self._scaled_mask = keep / (1.0 - self.rate)
        return x * self._scaled_mask

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        if self._scaled_mask is None:
            return grad_out
        return grad_out * self._scaled_mask


class Flatten(Layer):
    """(batch, length, channels) -> (batch, length*channels), length-major."""

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        return grad_out.reshape(self._shape)


class Dense(Layer):
    def __init__(self, name: str, in_features: int, out_features: int):
        super().__init__(name)
        self.in_features = in_features
        self.out_features = out_features
        self.w = np.zeros((in_features, out_features))
        self.b = np.zeros(out_features)
        self.gw = np.zeros_like(self.w)
        self.gb = np.zeros_like(self.b)

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        if x.ndim != 2 or x.shape[1] != self.in_features:
            raise ValueError(f"{self.name}: expected (batch, {self.in_features}), got {x.shape}")
        self._x = x
        return x @ self.w + self.b

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        if grad_out.shape != (self._x.shape[0], self.out_features):
            raise ValueError(f"{self.name}: upstream grad shape {grad_out.shape} mismatches forward output")
        self.gw = self._x.T @ grad_out
        self.gb = grad_out.sum(axis=0)
        return grad_out @ self.w.T

    def params(self) -> dict[str, np.ndarray]:
        return {"w": self.w, "b": self.b}

    def grads(self) -> dict[str, np.ndarray]:
        return {"w": self.gw, "b": self.gb}


class SoftmaxCrossEntropy:
    """Mean negative log-likelihood of the true class, max-shifted for stability."""

    @staticmethod
    def probabilities(logits: np.ndarray) -> np.ndarray:
        shifted = logits - logits.max(axis=1, keepdims=True)
        exp = np.exp(shifted)
        return exp / exp.sum(axis=1, keepdims=True)

    @staticmethod
    def loss_and_grad(logits: np.ndarray, labels: np.ndarray) -> tuple[float, np.ndarray]:
        labels = np.asarray(labels, dtype=np.intp)
        if logits.ndim != 2:
            raise ValueError(f"logits must be (batch, classes), got {logits.shape}")
        batch, classes = logits.shape
        if labels.shape != (batch,):
            raise ValueError(f"labels shape {labels.shape} mismatches batch {batch}")
        if labels.size and (labels.min() < 0 or labels.max() >= classes):
            raise ValueError(f"label out of range for {classes} classes")
        shifted = logits - logits.max(axis=1, keepdims=True)
        log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
        loss = float(-log_probs[np.arange(batch), labels].mean())
        grad = SoftmaxCrossEntropy.probabilities(logits)
        grad[np.arange(batch), labels] -= 1.0
        return loss, grad / batch
