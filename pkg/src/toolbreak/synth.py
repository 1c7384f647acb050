"""Seeded synthetic spindle-current lifecycles.

Each tool's machining signal is a spindle-frequency carrier under a
wear envelope: amplitude rises linearly with tool age, takes a brief
decline-and-rise dip just before failure, then jumps discontinuously
when breakage begins. Inside the breakage window the noise floor and
peak excursions are multiplied by a burst factor and impulsive spikes
appear, so the one-second variance and peak-to-peak series separate
sharply from the wear region. Short near-zero reset intervals are
interleaved and annotated so trimming has something to do.

No physical fidelity is claimed; the generator exists to exercise the
pipeline with the qualitative signatures real lifecycles show.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .rng import named_stream
from .signal_io import Segment, SegmentKind, SignalTrace, write_trace

GENERATOR_VERSION = 1
SPINDLE_RPM = 6500.0

# Operator sound-log phases, as fractions of tool life.
SOUND_PHASES = (
    (0.0, 12 / 55, "slight"),
    (12 / 55, 35 / 55, "normal"),
    (35 / 55, 46 / 55, "slightly larger"),
    (46 / 55, 1.0, "abnormal"),
)


@dataclass(frozen=True)
class ToolLifeProfile:
    life_minutes: float = 55.0
    breakage_window: tuple[float, float] = (52.0, 55.0)
    base_amplitude: float = 1.0
    wear_slope: float = 0.02
    noise_std: float = 0.03
    spindle_hz: float = SPINDLE_RPM / 60.0
    sample_rate_hz: int = 500
    burst_factor: float = 4.0
    dip_depth: float = 0.25
    dip_minutes: float = 1.0
    reset_period_min: float = 15.0
    reset_seconds: float = 3.0

    def __post_init__(self) -> None:
        start, end = self.breakage_window
        if not (0.0 < start < self.life_minutes):
            raise ValueError(f"breakage must start inside (0, {self.life_minutes}), got {start}")
        if not (start < end <= self.life_minutes):
            raise ValueError(f"bad breakage window ({start}, {end}) for life {self.life_minutes}")
        for name in ("base_amplitude", "noise_std", "spindle_hz", "wear_slope"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.burst_factor < 3.0:
            raise ValueError(f"burst_factor must be >= 3, got {self.burst_factor}")
        if self.sample_rate_hz < 2 * self.spindle_hz:
            raise ValueError(f"sample_rate_hz {self.sample_rate_hz} undersamples "
                             f"spindle at {self.spindle_hz:.1f} Hz")

    def sound_phases(self) -> tuple[tuple[float, float, str], ...]:
        """Operator-log style phases in minutes, scaled to this tool's life."""
        return tuple((lo * self.life_minutes, hi * self.life_minutes, label)
                     for lo, hi, label in SOUND_PHASES)

    def minute_count(self) -> int:
        return int(self.life_minutes * 60) // 60

    def minute_label(self, minute: int) -> int:
        """1 when the minute window's midpoint falls inside the breakage window."""
        midpoint = minute - 0.5
        start, end = self.breakage_window
        return int(start <= midpoint <= end)


def paper_profile() -> ToolLifeProfile:
    """Acquisition-rate profile (20 kHz); ~260 MB per tool, for full-scale runs."""
    return ToolLifeProfile(sample_rate_hz=20000)


def benchmark_profile() -> ToolLifeProfile:
    """Short lifecycle sized so prefix samples fit the scaled network input.

    The dip spans two minute windows so at least one dip window stays in
    every training tool after the trailing-normal validation holdout.
    """
    return ToolLifeProfile(life_minutes=10.0, breakage_window=(8.4, 10.0),
                           wear_slope=0.08, dip_minutes=2.0, reset_period_min=4.0)


def _machining_signal(profile: ToolLifeProfile, rng: np.random.Generator) -> np.ndarray:
    fs = profile.sample_rate_hz
    n = int(round(profile.life_minutes * 60)) * fs
    t_min = np.arange(n, dtype=np.float64) / (fs * 60.0)
    start, end = profile.breakage_window

    envelope = profile.base_amplitude + profile.wear_slope * t_min

    dip_from = start - profile.dip_minutes
    in_dip = (t_min >= dip_from) & (t_min < start)
    if in_dip.any():
        w = (t_min[in_dip] - dip_from) / profile.dip_minutes
        envelope[in_dip] *= 1.0 - profile.dip_depth * np.sin(np.pi * w)

    in_burst = t_min >= start
    burst_ramp = np.clip((t_min - start) / (end - start), 0.0, 1.0)
    burst_mult = np.where(in_burst, (profile.burst_factor / 4.0) * (2.6 + 0.8 * burst_ramp), 1.0)
    envelope *= burst_mult

    phase = rng.uniform(0.0, 2.0 * np.pi)
    carrier = envelope * np.sin(2.0 * np.pi * profile.spindle_hz * (t_min * 60.0) + phase)

    noise_scale = np.where(in_burst, profile.burst_factor, 1.0) * profile.noise_std
    noise = rng.standard_normal(n) * noise_scale

    spikes = np.zeros(n)
    spike_mask = in_burst & (rng.random(n) < 0.02)
    k = int(spike_mask.sum())
    if k:
        magnitude = rng.uniform(0.5, 1.0, size=k) * (profile.burst_factor / 2.0)
        sign = np.where(rng.random(k) < 0.5, -1.0, 1.0)
        spikes[spike_mask] = sign * magnitude * envelope[spike_mask]

    return carrier + noise + spikes


def generate_tool_trace(profile: ToolLifeProfile, seed: int,
                        tool_id: str = "tool-00") -> SignalTrace:
    """Deterministic lifecycle trace with annotated reset interludes."""
    rng = named_stream(seed, "synth")
    machining = _machining_signal(profile, rng)
    fs = profile.sample_rate_hz

    chunk = int(round(profile.reset_period_min * 60)) * fs
    reset_len = int(round(profile.reset_seconds * fs))
    boundaries = list(range(chunk, machining.size, chunk)) if chunk > 0 else []

    parts: list[np.ndarray] = []
    segments: list[Segment] = []
    cursor = 0
    prev = 0
    for boundary in boundaries:
        parts.append(machining[prev:boundary])
        segments.append(Segment(cursor, cursor + (boundary - prev), SegmentKind.MACHINING))
        cursor += boundary - prev
        parts.append(rng.standard_normal(reset_len) * 0.004)
        segments.append(Segment(cursor, cursor + reset_len, SegmentKind.RESET))
        cursor += reset_len
        prev = boundary
    parts.append(machining[prev:])
    segments.append(Segment(cursor, cursor + (machining.size - prev), SegmentKind.MACHINING))

    samples = np.concatenate(parts).astype(np.float32)
    return SignalTrace(fs, samples, tool_id, tuple(segments))


@dataclass(frozen=True)
class ToolRecord:
    tool_id: str
    seed: int
    profile: ToolLifeProfile
    trace_file: str


@dataclass(frozen=True)
class DatasetManifest:
    master_seed: int
    tools: tuple[ToolRecord, ...]
    generator_version: int = GENERATOR_VERSION

    def __post_init__(self) -> None:
        seeds = [t.seed for t in self.tools]
        if len(set(seeds)) != len(seeds):
            raise ValueError("per-tool seeds must be distinct")

    def breakage_fraction(self) -> float:
        """Fraction of one-minute windows labeled breakage across the set."""
        positives = total = 0
        for record in self.tools:
            minutes = record.profile.minute_count()
            total += minutes
            positives += sum(record.profile.minute_label(m) for m in range(1, minutes + 1))
        return positives / total if total else 0.0


def jittered_profiles(base: ToolLifeProfile, n_tools: int, master_seed: int,
                      jitter: float = 0.15) -> list[tuple[str, int, ToolLifeProfile]]:
    """Per-tool (tool_id, seed, profile) with +-jitter on life, slope, amplitude.

    The breakage window keeps its duration and offset from end of life
    (failure-phase length is a property of the failure, not of how long
    the tool lasted), and its start snaps to a whole machining minute,
    matching the minute-resolution bookkeeping of real processing logs.
    """
    rng = named_stream(master_seed, "jitter")
    start_back = base.life_minutes - base.breakage_window[0]
    end_back = base.life_minutes - base.breakage_window[1]
    out = []
    for i in range(n_tools):
        f_life, f_slope, f_amp = rng.uniform(1.0 - jitter, 1.0 + jitter, size=3)
        seed = int(rng.integers(0, 2 ** 31))
        life = base.life_minutes * f_life
        start = max(1.0, round(life - start_back))
        profile = replace(
            base,
            life_minutes=life,
            breakage_window=(start, life - end_back),
            wear_slope=base.wear_slope * f_slope,
            base_amplitude=base.base_amplitude * f_amp,
        )
        out.append((f"tool-{i:02d}", seed, profile))
    return out


def generate_dataset(n_tools: int = 5, master_seed: int = 42,
                     out_dir: str | Path | None = None,
                     base_profile: ToolLifeProfile | None = None) -> DatasetManifest:
    """Generate a family of tools; traces are written when out_dir is given."""
    if n_tools < 2:
        raise ValueError(f"need at least 2 tools for a train/test split, got {n_tools}")
    base = base_profile if base_profile is not None else ToolLifeProfile()
    records = []
    for tool_id, seed, profile in jittered_profiles(base, n_tools, master_seed):
        trace_file = f"{tool_id}.tbtr"
        records.append(ToolRecord(tool_id, seed, profile, trace_file))
        if out_dir is not None:
            trace = generate_tool_trace(profile, seed, tool_id)
            write_trace(trace, Path(out_dir) / trace_file, format="binary")
    manifest = DatasetManifest(master_seed, tuple(records))
    if out_dir is not None:
        write_manifest(manifest, Path(out_dir) / "manifest.txt")
    return manifest


def regenerate_trace(record: ToolRecord) -> SignalTrace:
    return generate_tool_trace(record.profile, record.seed, record.tool_id)


# --- manifest text format --------------------------------------------------

_PROFILE_FIELDS = (
    "life_minutes", "base_amplitude", "wear_slope", "noise_std", "spindle_hz",
    "sample_rate_hz", "burst_factor", "dip_depth", "dip_minutes",
    "reset_period_min", "reset_seconds",
)


def write_manifest(manifest: DatasetManifest, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("format=toolbreak-dataset\n")
        fh.write(f"version={manifest.generator_version}\n")
        fh.write(f"master_seed={manifest.master_seed}\n")
        fh.write(f"n_tools={len(manifest.tools)}\n")
        for record in manifest.tools:
            fh.write(f"\n[tool {record.tool_id}]\n")
            fh.write(f"seed={record.seed}\n")
            fh.write(f"trace={record.trace_file}\n")
            start, end = record.profile.breakage_window
            fh.write(f"breakage_start_min={start!r}\n")
            fh.write(f"breakage_end_min={end!r}\n")
            for name in _PROFILE_FIELDS:
                fh.write(f"{name}={getattr(record.profile, name)!r}\n")
            for lo, hi, label in record.profile.sound_phases():
                fh.write(f"phase={lo:.3f},{hi:.3f},{label}\n")


def read_manifest(path: str | Path) -> DatasetManifest:
    path = Path(path)
    master_seed: int | None = None
    version = GENERATOR_VERSION
    tools: list[ToolRecord] = []
    current: dict[str, str] | None = None
    tool_ids: list[str] = []

    def flush() -> None:
        if current is None:
            return
        profile = ToolLifeProfile(
            breakage_window=(float(current["breakage_start_min"]),
                             float(current["breakage_end_min"])),
            **{name: (int if name == "sample_rate_hz" else float)(current[name])
               for name in _PROFILE_FIELDS},
        )
        tools.append(ToolRecord(tool_ids[-1], int(current["seed"]), profile, current["trace"]))

    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("[tool "):
                flush()
                tool_ids.append(line[len("[tool "):-1])
                current = {}
                continue
            if "=" not in line:
                raise ValueError(f"{path.name} line {lineno}: expected key=value, got {line!r}")
            key, value = line.split("=", 1)
            if current is None:
                if key == "master_seed":
                    master_seed = int(value)
                elif key == "version":
                    version = int(value)
                elif key == "format" and value != "toolbreak-dataset":
                    raise ValueError(f"{path.name}: unknown manifest format {value!r}")
            elif key != "phase":
                current[key] = value
    flush()
    if master_seed is None:
        raise ValueError(f"{path.name}: missing master_seed")
    return DatasetManifest(master_seed, tuple(tools), version)
