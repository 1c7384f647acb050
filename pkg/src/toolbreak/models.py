"""Model specifications and builders for the detection networks.

Two architectures: a five-layer 1-D CNN (three conv/BN/relu/pool blocks,
dropout, two dense layers) trained with Adam, and a single-hidden-layer
dense baseline trained with plain gradient descent. The full-size CNN
(input 7200, filters 128/256/512) has 472,684,802 parameters; a scaled
variant with the same topology is the practical training target.

Parameter shapes and counts are derived symbolically so the full-size
spec can be validated without allocating half a billion weights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .nn.layers import BatchNorm1d, Conv1d, Dense, Dropout, Flatten, MaxPool1d, Relu
from .nn.network import Network
from .rng import named_stream

PAPER_INPUT_LENGTH = 7200
PAPER_CONV_FILTERS = (128, 256, 512)
PAPER_DENSE_WIDTH = 1024
MLP_HIDDEN_WIDTH = 512
SCALED_INPUT_LENGTH = 720
SCALED_CONV_FILTERS = (8, 16, 32)
SCALED_DENSE_WIDTH = 128
N_CLASSES = 2


@dataclass(frozen=True)
class ModelSpec:
    """Declarative description of one network; geometry only, no weights."""

    kind: str
    arch: str                       # "cnn" | "mlp"
    input_length: int
    conv_filters: tuple[int, ...] = ()
    kernel_size: int = 5
    dense_width: int = PAPER_DENSE_WIDTH
    dropout_rate: float = 0.5
    init_std: float = 0.01
    normalize_divisor: str = "std"
    optimizer: str = "adam"

    def __post_init__(self) -> None:
        if self.arch not in ("cnn", "mlp"):
            raise ValueError(f"arch must be 'cnn' or 'mlp', got {self.arch!r}")
        if self.input_length < 8:
            raise ValueError(f"input_length too small: {self.input_length}")
        if self.arch == "cnn":
            if len(self.conv_filters) != 3:
                raise ValueError(f"cnn needs 3 conv filter counts, got {self.conv_filters}")
            if self.input_length % 8:
                raise ValueError(f"cnn input_length must be divisible by 8, got {self.input_length}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")
        if self.normalize_divisor not in ("std", "var"):
            raise ValueError(f"normalize_divisor must be 'std' or 'var', got {self.normalize_divisor!r}")
        if self.optimizer not in ("adam", "gd"):
            raise ValueError(f"optimizer must be 'adam' or 'gd', got {self.optimizer!r}")

    def hidden_lengths(self) -> tuple[int, ...]:
        """Sequence length after each conv/pool block."""
        if self.arch != "cnn":
            return ()
        return tuple(self.input_length // 2 ** (i + 1) for i in range(3))

    def flat_features(self) -> int:
        if self.arch == "cnn":
            return (self.input_length // 8) * self.conv_filters[-1]
        return self.input_length

    def parameter_shapes(self) -> dict[str, tuple[int, ...]]:
        """Ordered parameter name -> shape map, without allocating anything."""
        shapes: dict[str, tuple[int, ...]] = {}
        if self.arch == "cnn":
            in_ch = 1
            for i, out_ch in enumerate(self.conv_filters, start=1):
                shapes[f"conv{i}.w"] = (self.kernel_size, in_ch, out_ch)
                shapes[f"conv{i}.b"] = (out_ch,)
                shapes[f"bn{i}.gamma"] = (out_ch,)
                shapes[f"bn{i}.beta"] = (out_ch,)
                in_ch = out_ch
        shapes["fc1.w"] = (self.flat_features(), self.dense_width)
        shapes["fc1.b"] = (self.dense_width,)
        shapes["fc2.w"] = (self.dense_width, N_CLASSES)
        shapes["fc2.b"] = (N_CLASSES,)
        return shapes

    def parameter_count(self) -> int:
        return sum(math.prod(shape) for shape in self.parameter_shapes().values())

    def build_network(self) -> Network:
        """Allocate the layer stack (zero weights; see init_parameters)."""
        layers: list = []
        if self.arch == "cnn":
            in_ch = 1
            for i, out_ch in enumerate(self.conv_filters, start=1):
                layers += [
                    Conv1d(f"conv{i}", self.kernel_size, in_ch, out_ch),
                    BatchNorm1d(f"bn{i}", out_ch),
                    Relu(f"relu{i}"),
                    MaxPool1d(f"pool{i}"),
                ]
                in_ch = out_ch
            layers += [Dropout("drop", self.dropout_rate), Flatten("flatten")]
        layers += [
            Dense("fc1", self.flat_features(), self.dense_width),
            Relu("relu_fc"),
            Dense("fc2", self.dense_width, N_CLASSES),
        ]
        return Network(layers)

    # -- canonical text form (embedded in checkpoints) --------------------

    def to_text(self) -> str:
        fields = {
            "arch": self.arch,
            "conv_filters": ",".join(str(f) for f in self.conv_filters),
            "dense_width": self.dense_width,
            "dropout_rate": self.dropout_rate,
            "init_std": self.init_std,
            "input_length": self.input_length,
            "kernel_size": self.kernel_size,
            "kind": self.kind,
            "normalize_divisor": self.normalize_divisor,
            "optimizer": self.optimizer,
        }
        return "".join(f"{k}={fields[k]}\n" for k in sorted(fields))

    @classmethod
    def from_text(cls, text: str) -> "ModelSpec":
        pairs: dict[str, str] = {}
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"bad spec line {line!r}")
            key, value = line.split("=", 1)
            pairs[key] = value
        try:
            filters = tuple(int(f) for f in pairs["conv_filters"].split(",") if f)
            return cls(
                kind=pairs["kind"],
                arch=pairs["arch"],
                input_length=int(pairs["input_length"]),
                conv_filters=filters,
                kernel_size=int(pairs["kernel_size"]),
                dense_width=int(pairs["dense_width"]),
                dropout_rate=float(pairs["dropout_rate"]),
                init_std=float(pairs["init_std"]),
                normalize_divisor=pairs["normalize_divisor"],
                optimizer=pairs["optimizer"],
            )
        except KeyError as exc:
            raise ValueError(f"spec text missing field {exc.args[0]!r}") from exc


def build_cnn_paper() -> ModelSpec:
    return ModelSpec(kind="cnn_paper", arch="cnn", input_length=PAPER_INPUT_LENGTH,
                     conv_filters=PAPER_CONV_FILTERS, dense_width=PAPER_DENSE_WIDTH)


def build_cnn_scaled(input_length: int = SCALED_INPUT_LENGTH,
                     conv_filters: tuple[int, int, int] = SCALED_CONV_FILTERS,
                     dense_width: int = SCALED_DENSE_WIDTH,
                     dropout_rate: float = 0.5) -> ModelSpec:
    """Same five-layer topology at desk scale; the full geometry reproduces
    build_cnn_paper exactly."""
    spec = ModelSpec(kind="cnn_scaled", arch="cnn", input_length=input_length,
                     conv_filters=tuple(conv_filters), dense_width=dense_width,
                     dropout_rate=dropout_rate)
    paper = build_cnn_paper()
    if (spec.input_length, spec.conv_filters, spec.dense_width, spec.dropout_rate) == (
            paper.input_length, paper.conv_filters, paper.dense_width, paper.dropout_rate):
        return paper
    return spec


def build_bp_paper() -> ModelSpec:
    return ModelSpec(kind="bp_paper", arch="mlp", input_length=PAPER_INPUT_LENGTH,
                     dense_width=MLP_HIDDEN_WIDTH, dropout_rate=0.0, optimizer="gd")


def build_bp_scaled(input_length: int = SCALED_INPUT_LENGTH) -> ModelSpec:
    if input_length == PAPER_INPUT_LENGTH:
        return build_bp_paper()
    return ModelSpec(kind="bp_scaled", arch="mlp", input_length=input_length,
                     dense_width=MLP_HIDDEN_WIDTH, dropout_rate=0.0, optimizer="gd")


def init_parameters(spec: ModelSpec, seed: int) -> dict[str, np.ndarray]:
    """Gaussian(0, init_std) weights from the init stream; zero biases and
    batch-norm shifts, unit batch-norm scales."""
    rng = named_stream(seed, "init")
    params: dict[str, np.ndarray] = {}
    for name, shape in spec.parameter_shapes().items():
        if name.endswith(".w"):
            params[name] = rng.standard_normal(shape) * spec.init_std
        elif name.endswith(".gamma"):
            params[name] = np.ones(shape)
        else:
            params[name] = np.zeros(shape)
    return params


def instantiate(spec: ModelSpec, seed: int) -> Network:
    """Build the network and fill it with freshly initialized parameters."""
    net = spec.build_network()
    net.load_parameters(init_parameters(spec, seed))
    return net
