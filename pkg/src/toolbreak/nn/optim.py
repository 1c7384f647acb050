"""Parameter updates: plain gradient descent and bias-corrected Adam."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPSILON = 1e-8


@dataclass
class OptimizerState:
    kind: str
    learning_rate: float
    step_count: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def make_optimizer(kind: str, learning_rate: float, params: dict[str, np.ndarray]) -> OptimizerState:
    if kind not in ("adam", "gd"):
        raise ValueError(f"optimizer kind must be 'adam' or 'gd', got {kind!r}")
    state = OptimizerState(kind, learning_rate)
    if kind == "adam":
        state.m = {k: np.zeros_like(p) for k, p in params.items()}
        state.v = {k: np.zeros_like(p) for k, p in params.items()}
    return state


def _check_congruent(params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
    for key, p in params.items():
        if key not in grads:
            raise ValueError(f"missing gradient for parameter {key!r}")
        if grads[key].shape != p.shape:
            raise ValueError(f"gradient shape {grads[key].shape} mismatches parameter {key!r} {p.shape}")


def gd_step(params: dict[str, np.ndarray], grads: dict[str, np.ndarray], state: OptimizerState) -> None:
    _check_congruent(params, grads)
    for key, p in params.items():
        p -= state.learning_rate * grads[key]
    state.step_count += 1


def adam_step(params: dict[str, np.ndarray], grads: dict[str, np.ndarray], state: OptimizerState) -> None:
    _check_congruent(params, grads)
    state.step_count += 1
    t = state.step_count
    bias1 = 1.0 - ADAM_BETA1 ** t
    bias2 = 1.0 - ADAM_BETA2 ** t
    for key, p in params.items():
        g = grads[key]
        m = state.m[key]
        v = state.v[key]
        m *= ADAM_BETA1
        m += (1.0 - ADAM_BETA1) * g
        v *= ADAM_BETA2
        v += (1.0 - ADAM_BETA2) * np.square(g)
        p -= state.learning_rate * (m / bias1) / (np.sqrt(v / bias2) + ADAM_EPSILON)


def optimizer_step(params: dict[str, np.ndarray], grads: dict[str, np.ndarray], state: OptimizerState) -> None:
    if state.kind == "adam":
        adam_step(params, grads, state)
    else:
        gd_step(params, grads, state)
