"""Time-domain statistics over current windows, plus feature normalization.

Four window statistics drive the whole detection pipeline: mean of the
absolute current, mean square (its square root, the RMS, is exposed
separately), population variance, and peak-to-peak range. All four are
computed in float64 with population (1/N) weighting.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .signal_io import SignalTrace, Span, windows

SIGMA_EPSILON = 1e-12


class DegenerateSigmaError(ValueError):
    """Raised when normalization statistics cannot be fit (constant input)."""


def _as_windows_2d(values) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[np.newaxis, :]
    if arr.ndim != 2:
        raise ValueError(f"expected 1-D window or 2-D window stack, got shape {arr.shape}")
    if arr.shape[1] == 0:
        raise ValueError("empty window")
    if not np.all(np.isfinite(arr)):
        raise ValueError("window contains non-finite values")
    return arr


def mean_abs(window_samples) -> float:
    """Mean of the absolute current, (1/N) sum |x_i|."""
    return float(np.abs(_as_windows_2d(window_samples)).mean(axis=1)[0])


def mean_square(window_samples) -> float:
    """Mean square, (1/N) sum x_i^2 (no square root; see rms)."""
    return float(np.square(_as_windows_2d(window_samples)).mean(axis=1)[0])


def rms(window_samples) -> float:
    """Root mean square, sqrt(mean_square)."""
    return float(np.sqrt(mean_square(window_samples)))


def variance(window_samples) -> float:
    """Population variance around the plain arithmetic mean."""
    return max(float(_as_windows_2d(window_samples).var(axis=1)[0]), 0.0)


def peak_to_peak(window_samples) -> float:
    """max(x_i) - min(x_i)."""
    arr = _as_windows_2d(window_samples)
    return float((arr.max(axis=1) - arr.min(axis=1))[0])


@dataclass(frozen=True)
class FeatureVector:
    """The four window statistics, all non-negative by construction."""

    mean_abs: float
    mean_square: float
    variance: float
    peak_to_peak: float

    def __post_init__(self) -> None:
        for name in ("mean_abs", "mean_square", "variance", "peak_to_peak"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")


@dataclass(frozen=True)
class FeatureSeries:
    """Per-window feature vectors for one tool, aligned to windows(trace, span)."""

    span: Span
    values: tuple[FeatureVector, ...]
    tool_id: str = "unknown"

    def __len__(self) -> int:
        return len(self.values)

    def field(self, name: str) -> np.ndarray:
        return np.array([getattr(v, name) for v in self.values], dtype=np.float64)


def extract_features(trace: SignalTrace, span: Span) -> FeatureSeries:
    """One FeatureVector per full window of a trimmed trace."""
    wins = windows(trace, span)
    wlen = span.length(trace.sample_rate_hz)
    if not wins:
        return FeatureSeries(span, (), trace.tool_id)
    stacked = trace.samples[:len(wins) * wlen].astype(np.float64).reshape(len(wins), wlen)
    m_abs = np.abs(stacked).mean(axis=1)
    m_sq = np.square(stacked).mean(axis=1)
    var = np.maximum(stacked.var(axis=1), 0.0)
    p2p = stacked.max(axis=1) - stacked.min(axis=1)
    values = tuple(
        FeatureVector(float(a), float(s), float(v), float(p))
        for a, s, v, p in zip(m_abs, m_sq, var, p2p)
    )
    return FeatureSeries(span, values, trace.tool_id)


# --- normalization -------------------------------------------------------

@dataclass(frozen=True)
class NormalizationStats:
    mu: float
    sigma: float

    def __post_init__(self) -> None:
        if not (self.sigma > SIGMA_EPSILON):
            raise DegenerateSigmaError(f"sigma {self.sigma} is degenerate")


def fit_normalization(series: Sequence[float] | np.ndarray) -> NormalizationStats:
    """Population mean and standard deviation of a value stream."""
    arr = np.asarray(series, dtype=np.float64)
    if arr.size < 2:
        raise ValueError(f"need at least 2 values to fit normalization, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("non-finite value in normalization input")
    mu = float(arr.mean())
    sigma = float(arr.std())
    if sigma <= SIGMA_EPSILON:
        raise DegenerateSigmaError(f"input is constant (sigma={sigma})")
    return NormalizationStats(mu, sigma)


def normalize(values, stats: NormalizationStats, divisor: str = "std") -> np.ndarray:
    """Center on mu and divide by sigma (``std``) or sigma^2 (``var``)."""
    if divisor == "std":
        denom = stats.sigma
    elif divisor == "var":
        denom = stats.sigma ** 2
    else:
        raise ValueError(f"divisor must be 'std' or 'var', got {divisor!r}")
    return (np.asarray(values, dtype=np.float64) - stats.mu) / denom


# --- newline-delimited record export --------------------------------------

def write_feature_records(series: FeatureSeries, path: str | Path) -> None:
    """One JSON record per window: t_index, span, mean_abs, mean_square, variance, p2p."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for i, v in enumerate(series.values):
            record = {
                "t_index": i,
                "span": series.span.value,
                "mean_abs": v.mean_abs,
                "mean_square": v.mean_square,
                "variance": v.variance,
                "p2p": v.peak_to_peak,
            }
            fh.write(json.dumps(record) + "\n")


def read_feature_records(path: str | Path, tool_id: str | None = None) -> FeatureSeries:
    path = Path(path)
    values: list[FeatureVector] = []
    span: Span | None = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
                row_span = Span.parse(record["span"])
                vec = FeatureVector(record["mean_abs"], record["mean_square"],
                                    record["variance"], record["p2p"])
                t_index = int(record["t_index"])
            except (KeyError, ValueError, json.JSONDecodeError) as exc:
                raise ValueError(f"{path.name} line {lineno}: bad feature record") from exc
            if span is None:
                span = row_span
            elif row_span is not span:
                raise ValueError(f"{path.name} line {lineno}: mixed spans in one series")
            if t_index != len(values):
                raise ValueError(f"{path.name} line {lineno}: t_index {t_index}, expected {len(values)}")
            values.append(vec)
    if span is None:
        raise ValueError(f"{path.name}: empty feature record file")
    return FeatureSeries(span, tuple(values), tool_id or path.stem)
