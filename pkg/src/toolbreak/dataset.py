"""Labeled samples from per-second feature series, and the tool-level split.

A sample is built per elapsed machining minute: the one-second mean-abs
values from time zero up to that minute, zero-padded on the right to the
network input length. Its label says whether that minute's window
midpoint falls inside the tool's breakage window. A ``sliding`` mode
keeps only the most recent input-length seconds instead of the growing
prefix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .features import FeatureSeries
from .synth import DatasetManifest, ToolLifeProfile

SECONDS_PER_MINUTE = 60

SAMPLE_MODES = ("prefix", "sliding")


@dataclass(frozen=True)
class LabeledSample:
    """Fixed-length feature window with provenance.

    ``features`` holds raw (un-normalized) values; padding occupies only
    the trailing ``input_length - n_real`` positions and stays exactly
    zero through normalization.
    """

    features: np.ndarray
    n_real: int
    label: int
    tool_id: str
    window_minute: int

    def __post_init__(self) -> None:
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label}")
        if not 0 < self.n_real <= self.features.size:
            raise ValueError(f"n_real {self.n_real} out of range for {self.features.size}")
        if self.features.size > self.n_real and np.any(self.features[self.n_real:]):
            raise ValueError("padding region must be zero")


def tool_samples(series: FeatureSeries, profile: ToolLifeProfile, input_length: int,
                 sample_mode: str = "prefix", truncate: bool = False) -> list[LabeledSample]:
    """One sample per full machining minute of one tool's 1-second series."""
    if sample_mode not in SAMPLE_MODES:
        raise ValueError(f"sample_mode must be one of {SAMPLE_MODES}, got {sample_mode!r}")
    values = series.field("mean_abs")
    minutes = values.size // SECONDS_PER_MINUTE
    if sample_mode == "prefix" and minutes * SECONDS_PER_MINUTE > input_length:
        if truncate:
            minutes = input_length // SECONDS_PER_MINUTE
        else:
            raise ValueError(
                f"tool {series.tool_id!r} spans {minutes * SECONDS_PER_MINUTE} seconds but "
                f"input_length is {input_length}; increase input_length or pass truncate=True")
    samples = []
    for minute in range(1, minutes + 1):
        end = minute * SECONDS_PER_MINUTE
        start = max(0, end - input_length) if sample_mode == "sliding" else 0
        real = values[start:end]
        vec = np.zeros(input_length, dtype=np.float64)
        vec[:real.size] = real
        samples.append(LabeledSample(vec, int(real.size), profile.minute_label(minute),
                                     series.tool_id, minute))
    return samples


def assemble_samples(series_by_tool: dict[str, FeatureSeries], manifest: DatasetManifest,
                     input_length: int, sample_mode: str = "prefix",
                     truncate: bool = False) -> list[LabeledSample]:
    """Samples for every manifest tool, ordered by (tool, minute)."""
    samples: list[LabeledSample] = []
    for record in manifest.tools:
        if record.tool_id not in series_by_tool:
            raise ValueError(f"no feature series for tool {record.tool_id!r}")
        samples.extend(tool_samples(series_by_tool[record.tool_id], record.profile,
                                    input_length, sample_mode, truncate))
    return samples


@dataclass(frozen=True)
class SplitPlan:
    train_tools: tuple[str, ...]
    test_tool: str

    def __post_init__(self) -> None:
        if not self.train_tools:
            raise ValueError("need at least one train tool")
        if self.test_tool in self.train_tools:
            raise ValueError(f"test tool {self.test_tool!r} also appears in train set")


def default_split_plan(manifest: DatasetManifest) -> SplitPlan:
    """Last manifest tool is the held-out lifecycle (4:1 at five tools)."""
    if len(manifest.tools) < 2:
        raise ValueError("need at least 2 tools to split")
    ids = [t.tool_id for t in manifest.tools]
    return SplitPlan(tuple(ids[:-1]), ids[-1])


def split(samples: list[LabeledSample], plan: SplitPlan,
          validation_fraction: float = 0.1,
          ) -> tuple[list[LabeledSample], list[LabeledSample], list[LabeledSample]]:
    """Partition into (train, validation, test).

    Test is the held-out tool's full lifecycle in time order. Validation
    takes the trailing time-block of each train tool's normal-labeled
    windows; breakage-labeled windows always stay in train, otherwise
    the terminal failure phase would leave training single-class.
    """
    if not 0.0 <= validation_fraction < 1.0:
        raise ValueError(f"validation_fraction must be in [0, 1), got {validation_fraction}")
    tool_ids = {s.tool_id for s in samples}
    known = set(plan.train_tools) | {plan.test_tool}
    if not tool_ids <= known:
        raise ValueError(f"samples reference tools outside the plan: {sorted(tool_ids - known)}")

    test = [s for s in samples if s.tool_id == plan.test_tool]
    train: list[LabeledSample] = []
    validation: list[LabeledSample] = []
    for tool in plan.train_tools:
        rows = sorted((s for s in samples if s.tool_id == tool), key=lambda s: s.window_minute)
        normals = [s for s in rows if s.label == 0]
        n_val = max(1, int(validation_fraction * len(normals))) if validation_fraction > 0 and normals else 0
        held = set(id(s) for s in normals[len(normals) - n_val:])
        for s in rows:
            (validation if id(s) in held else train).append(s)
    return train, validation, test


def features_matrix(samples: list[LabeledSample]) -> np.ndarray:
    return np.stack([s.features for s in samples]) if samples else np.empty((0, 0))


def labels_vector(samples: list[LabeledSample]) -> np.ndarray:
    return np.array([s.label for s in samples], dtype=np.intp)
