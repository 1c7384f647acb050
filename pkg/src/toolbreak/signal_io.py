"""Raw spindle-current traces: file formats, trimming, and windowing.

A trace is the full current recording for one tool's machining lifecycle.
Samples are stored as float32 (what the acquisition hardware delivers);
all downstream statistics are computed in float64.

Two on-disk formats:

* CSV — header lines ``# sample_rate_hz=<int>``, ``# tool_id=<string>``,
  ``# segment=<start>,<end>,<kind>`` (repeatable), then ``index,current``
  rows.
* binary — magic ``TBTR``, version u8=1, sample_rate_hz u32 LE,
  sample_count u64 LE, segment_count u32 LE, segment records
  (u64 start, u64 end, u8 kind), then sample_count float32 LE values.
  The binary layout carries no tool id; readers fall back to the file
  stem.
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

MAGIC = b"TBTR"
BINARY_VERSION = 1
PAPER_SAMPLE_RATE_HZ = 20000

_HEADER = struct.Struct("<4sBIQI")
_SEGMENT_RECORD = struct.Struct("<QQB")


class TraceFormatError(ValueError):
    """A trace file violates the CSV or binary trace format."""


class SegmentKind(str, enum.Enum):
    MACHINING = "machining"
    RESET = "reset"
    IDLE = "idle"


_KIND_CODES = {SegmentKind.MACHINING: 0, SegmentKind.RESET: 1, SegmentKind.IDLE: 2}
_CODE_KINDS = {v: k for k, v in _KIND_CODES.items()}


class Span(str, enum.Enum):
    """Window time span for feature extraction."""

    ONE_SECOND = "1s"
    ONE_MINUTE = "1m"

    def length(self, sample_rate_hz: int) -> int:
        """Window length in samples at the given rate."""
        return sample_rate_hz if self is Span.ONE_SECOND else 60 * sample_rate_hz

    @classmethod
    def parse(cls, text: str) -> "Span":
        for span in cls:
            if text in (span.value, span.name.lower()):
                return span
        raise ValueError(f"unknown span {text!r}; expected '1s' or '1m'")


@dataclass(frozen=True)
class Segment:
    start: int
    end: int
    kind: SegmentKind

    def __post_init__(self) -> None:
        if self.start < 0 or self.end < self.start:
            raise ValueError(f"bad segment bounds [{self.start}, {self.end})")


@dataclass(frozen=True)
class SignalTrace:
    """Immutable raw current recording with segment annotations.

    An empty segment list means the whole trace is machining time.
    """

    sample_rate_hz: int
    samples: np.ndarray
    tool_id: str = "unknown"
    segments: tuple[Segment, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if self.sample_rate_hz < 1:
            raise ValueError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")
        samples = np.asarray(self.samples, dtype=np.float32)
        if samples.ndim != 1:
            raise ValueError(f"samples must be 1-D, got shape {samples.shape}")
        if samples.size and not np.all(np.isfinite(samples)):
            bad = int(np.flatnonzero(~np.isfinite(samples))[0])
            raise ValueError(f"non-finite sample at index {bad}")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "segments", tuple(self.segments))
        prev_end = 0
        for seg in self.segments:
            if seg.start < prev_end:
                raise ValueError(f"segments overlap or are unsorted near index {seg.start}")
            if seg.end > samples.size:
                raise ValueError(f"segment [{seg.start}, {seg.end}) exceeds trace length {samples.size}")
            prev_end = seg.end

    def __len__(self) -> int:
        return int(self.samples.size)

    @property
    def duration_seconds(self) -> float:
        return len(self) / self.sample_rate_hz

    def machining_segments(self) -> tuple[Segment, ...]:
        if not self.segments:
            if len(self) == 0:
                return ()
            return (Segment(0, len(self), SegmentKind.MACHINING),)
        return tuple(s for s in self.segments if s.kind is SegmentKind.MACHINING)

    def is_trimmed(self) -> bool:
        """True when the trace consists solely of machining samples."""
        machining = self.machining_segments()
        covered = sum(s.end - s.start for s in machining)
        non_machining = any(s.kind is not SegmentKind.MACHINING for s in self.segments)
        return not non_machining and covered == len(self)


@dataclass(frozen=True)
class Window:
    """One feature window located inside a trimmed trace."""

    trace_ref: str
    start_index: int
    length: int
    span: Span


def trim_non_machining(trace: SignalTrace) -> SignalTrace:
    """Drop every sample outside the machining segments.

    The surviving samples are concatenated in time order and the segment
    table is rewritten to a single machining segment. Idempotent.
    """
    parts = [trace.samples[s.start:s.end] for s in trace.machining_segments()]
    samples = np.concatenate(parts) if parts else np.empty(0, dtype=np.float32)
    segments = (Segment(0, samples.size, SegmentKind.MACHINING),) if samples.size else ()
    return SignalTrace(trace.sample_rate_hz, samples, trace.tool_id, segments)


def windows(trace: SignalTrace, span: Span) -> list[Window]:
    """Non-overlapping contiguous windows; a trailing partial window is dropped."""
    if not trace.is_trimmed():
        raise ValueError("trace must be trimmed before windowing (call trim_non_machining)")
    wlen = span.length(trace.sample_rate_hz)
    count = len(trace) // wlen
    return [Window(trace.tool_id, i * wlen, wlen, span) for i in range(count)]


def window_values(trace: SignalTrace, window: Window) -> np.ndarray:
    return trace.samples[window.start_index:window.start_index + window.length]


# --- CSV ---------------------------------------------------------------

def _write_csv(trace: SignalTrace, path: Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# sample_rate_hz={trace.sample_rate_hz}\n")
        fh.write(f"# tool_id={trace.tool_id}\n")
        for seg in trace.segments:
            fh.write(f"# segment={seg.start},{seg.end},{seg.kind.value}\n")
        for i, value in enumerate(trace.samples):
            fh.write(f"{i},{float(value):.9g}\n")


def parse_csv_header_line(line: str) -> tuple[str, str]:
    """Split a ``# key=value`` header line; raises TraceFormatError otherwise."""
    body = line[1:].strip()
    if "=" not in body:
        raise TraceFormatError(f"malformed header line: {line.strip()!r}")
    key, value = body.split("=", 1)
    return key.strip(), value.strip()


def parse_segment_spec(value: str) -> Segment:
    parts = value.split(",")
    if len(parts) != 3:
        raise TraceFormatError(f"malformed segment spec: {value!r}")
    try:
        start, end = int(parts[0]), int(parts[1])
        kind = SegmentKind(parts[2])
    except (ValueError, KeyError) as exc:
        raise TraceFormatError(f"malformed segment spec: {value!r}") from exc
    return Segment(start, end, kind)


def _read_csv(path: Path) -> SignalTrace:
    sample_rate: int | None = None
    tool_id = path.stem
    segments: list[Segment] = []
    values: list[float] = []
    expected_index = 0
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, value = parse_csv_header_line(line)
                if key == "sample_rate_hz":
                    try:
                        sample_rate = int(value)
                    except ValueError as exc:
                        raise TraceFormatError(f"line {lineno}: bad sample_rate_hz {value!r}") from exc
                elif key == "tool_id":
                    tool_id = value
                elif key == "segment":
                    segments.append(parse_segment_spec(value))
                else:
                    raise TraceFormatError(f"line {lineno}: unknown header key {key!r}")
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise TraceFormatError(f"line {lineno}: expected 'index,current', got {line!r}")
            try:
                index = int(parts[0])
                value = float(parts[1])
            except ValueError as exc:
                raise TraceFormatError(f"line {lineno}: unparsable row {line!r}") from exc
            if index != expected_index:
                raise TraceFormatError(f"line {lineno}: sample index {index}, expected {expected_index}")
            if not np.isfinite(value):
                raise TraceFormatError(f"line {lineno}: non-finite sample value {parts[1]!r}")
            values.append(value)
            expected_index += 1
    if sample_rate is None:
        raise TraceFormatError(f"{path.name}: missing '# sample_rate_hz=' header")
    if not values:
        raise TraceFormatError(f"{path.name}: no samples")
    return SignalTrace(sample_rate, np.array(values, dtype=np.float32), tool_id, tuple(segments))


# --- binary ------------------------------------------------------------

def _write_binary(trace: SignalTrace, path: Path) -> None:
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, BINARY_VERSION, trace.sample_rate_hz,
                              len(trace), len(trace.segments)))
        for seg in trace.segments:
            fh.write(_SEGMENT_RECORD.pack(seg.start, seg.end, _KIND_CODES[seg.kind]))
        fh.write(np.asarray(trace.samples, dtype="<f4").tobytes())


def _read_binary(path: Path) -> SignalTrace:
    blob = path.read_bytes()
    if len(blob) < _HEADER.size:
        raise TraceFormatError(f"{path.name}: truncated header ({len(blob)} bytes)")
    magic, version, sample_rate, sample_count, segment_count = _HEADER.unpack_from(blob, 0)
    if magic != MAGIC:
        raise TraceFormatError(f"{path.name}: bad magic {magic!r}")
    if version != BINARY_VERSION:
        raise TraceFormatError(f"{path.name}: unsupported version {version}")
    offset = _HEADER.size
    segments = []
    for _ in range(segment_count):
        if offset + _SEGMENT_RECORD.size > len(blob):
            raise TraceFormatError(f"{path.name}: truncated segment table at byte {offset}")
        start, end, code = _SEGMENT_RECORD.unpack_from(blob, offset)
        if code not in _CODE_KINDS:
            raise TraceFormatError(f"{path.name}: unknown segment kind code {code} at byte {offset}")
        segments.append(Segment(start, end, _CODE_KINDS[code]))
        offset += _SEGMENT_RECORD.size
    expected = sample_count * 4
    if len(blob) - offset < expected:
        raise TraceFormatError(
            f"{path.name}: payload holds {(len(blob) - offset) // 4} samples "
            f"but header declares {sample_count} (truncated at byte {offset})")
    samples = np.frombuffer(blob, dtype="<f4", count=sample_count, offset=offset)
    if sample_count and not np.all(np.isfinite(samples)):
        bad = int(np.flatnonzero(~np.isfinite(samples))[0])
        raise TraceFormatError(f"{path.name}: non-finite sample at index {bad}")
    return SignalTrace(sample_rate, samples.copy(), path.stem, tuple(segments))


# --- public entry points -------------------------------------------------

def write_trace(trace: SignalTrace, path: str | Path, format: str = "binary") -> None:
    path = Path(path)
    if format == "csv":
        _write_csv(trace, path)
    elif format == "binary":
        _write_binary(trace, path)
    else:
        raise ValueError(f"unknown trace format {format!r}")


def read_trace(path: str | Path, format: str | None = None) -> SignalTrace:
    """Read a trace; the format is sniffed from the magic bytes when not given."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    if format is None:
        with open(path, "rb") as fh:
            format = "binary" if fh.read(4) == MAGIC else "csv"
    if format == "csv":
        return _read_csv(path)
    if format == "binary":
        return _read_binary(path)
    raise ValueError(f"unknown trace format {format!r}")
