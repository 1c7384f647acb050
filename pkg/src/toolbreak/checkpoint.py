"""Binary checkpoint format for trained networks.

Layout: magic ``TBSN``, version u8, a UTF-8 key=value text block (model
spec plus ``meta.*`` and ``opt.*`` lines), a table of named arrays
(name, dtype, shape, byte offset), then one little-endian payload blob.
Parameters, batch-norm running statistics, and Adam moments are all
table entries; restoring a checkpoint therefore reproduces evaluation
outputs bit-exactly and allows training to resume.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .models import ModelSpec
from .nn.optim import OptimizerState

MAGIC = b"TBSN"
VERSION = 1

_DTYPE_CODES = {"<f4": 1, "<f8": 2}
_CODE_DTYPES = {v: k for k, v in _DTYPE_CODES.items()}

_PREAMBLE = struct.Struct("<4sBI")        # magic, version, spec text length
_COUNT = struct.Struct("<I")
_ENTRY_HEAD = struct.Struct("<HBB")       # name length, dtype code, ndim
_OFFSET = struct.Struct("<Q")


class CheckpointFormatError(ValueError):
    """A checkpoint file violates the TBSN format."""


@dataclass
class Checkpoint:
    spec: ModelSpec
    params: dict[str, np.ndarray]
    buffers: dict[str, np.ndarray] = field(default_factory=dict)
    optimizer: OptimizerState | None = None
    meta: dict[str, str] = field(default_factory=dict)


def _table_entries(ckpt: Checkpoint) -> dict[str, np.ndarray]:
    entries: dict[str, np.ndarray] = {}
    for name, arr in ckpt.params.items():
        entries[f"param.{name}"] = arr
    for name, arr in ckpt.buffers.items():
        entries[f"buffer.{name}"] = arr
    if ckpt.optimizer is not None:
        for name, arr in ckpt.optimizer.m.items():
            entries[f"opt.m.{name}"] = arr
        for name, arr in ckpt.optimizer.v.items():
            entries[f"opt.v.{name}"] = arr
    return entries


def _text_block(ckpt: Checkpoint) -> str:
    text = ckpt.spec.to_text()
    for key in sorted(ckpt.meta):
        if "=" in key or "\n" in key or "\n" in ckpt.meta[key]:
            raise ValueError(f"meta key/value not encodable: {key!r}")
        text += f"meta.{key}={ckpt.meta[key]}\n"
    if ckpt.optimizer is not None:
        text += f"opt.kind={ckpt.optimizer.kind}\n"
        text += f"opt.learning_rate={ckpt.optimizer.learning_rate!r}\n"
        text += f"opt.step_count={ckpt.optimizer.step_count}\n"
    return text


def save_checkpoint(ckpt: Checkpoint, path: str | Path) -> None:
    entries = _table_entries(ckpt)
    spec_bytes = _text_block(ckpt).encode("utf-8")
    table = bytearray()
    payload = bytearray()
    for name, arr in entries.items():
        arr = np.asarray(arr)
        dtype = "<f4" if arr.dtype == np.float32 else "<f8"
        name_bytes = name.encode("utf-8")
        table += _ENTRY_HEAD.pack(len(name_bytes), _DTYPE_CODES[dtype], arr.ndim)
        table += name_bytes
        for extent in arr.shape:
            table += struct.pack("<I", extent)
        table += _OFFSET.pack(len(payload))
        payload += np.ascontiguousarray(arr, dtype=dtype).tobytes()
    with open(path, "wb") as fh:
        fh.write(_PREAMBLE.pack(MAGIC, VERSION, len(spec_bytes)))
        fh.write(spec_bytes)
        fh.write(_COUNT.pack(len(entries)))
        fh.write(table)
        fh.write(_OFFSET.pack(len(payload)))
        fh.write(payload)


def _split_text_block(text: str) -> tuple[str, dict[str, str], dict[str, str]]:
    spec_lines: list[str] = []
    meta: dict[str, str] = {}
    opt: dict[str, str] = {}
    for line in text.splitlines():
        if not line.strip():
            continue
        if line.startswith("meta."):
            key, value = line[len("meta."):].split("=", 1)
            meta[key] = value
        elif line.startswith("opt."):
            key, value = line[len("opt."):].split("=", 1)
            opt[key] = value
        else:
            spec_lines.append(line)
    return "\n".join(spec_lines), meta, opt


def load_checkpoint(path: str | Path) -> Checkpoint:
    path = Path(path)
    blob = path.read_bytes()
    if len(blob) < _PREAMBLE.size:
        raise CheckpointFormatError(f"{path.name}: truncated preamble")
    magic, version, spec_len = _PREAMBLE.unpack_from(blob, 0)
    if magic != MAGIC:
        raise CheckpointFormatError(f"{path.name}: bad magic {magic!r}")
    if version != VERSION:
        raise CheckpointFormatError(f"{path.name}: unsupported version {version}")
    offset = _PREAMBLE.size
    if offset + spec_len > len(blob):
        raise CheckpointFormatError(f"{path.name}: truncated spec block")
    spec_text, meta, opt_fields = _split_text_block(blob[offset:offset + spec_len].decode("utf-8"))
    try:
        spec = ModelSpec.from_text(spec_text)
    except ValueError as exc:
        raise CheckpointFormatError(f"{path.name}: {exc}") from exc
    offset += spec_len

    if offset + _COUNT.size > len(blob):
        raise CheckpointFormatError(f"{path.name}: truncated entry count")
    (entry_count,) = _COUNT.unpack_from(blob, offset)
    offset += _COUNT.size

    raw_entries: list[tuple[str, str, tuple[int, ...], int]] = []
    for _ in range(entry_count):
        if offset + _ENTRY_HEAD.size > len(blob):
            raise CheckpointFormatError(f"{path.name}: truncated table at byte {offset}")
        name_len, dtype_code, ndim = _ENTRY_HEAD.unpack_from(blob, offset)
        offset += _ENTRY_HEAD.size
        if dtype_code not in _CODE_DTYPES:
            raise CheckpointFormatError(f"{path.name}: unknown dtype code {dtype_code}")
        name = blob[offset:offset + name_len].decode("utf-8")
        offset += name_len
        shape = struct.unpack_from(f"<{ndim}I", blob, offset) if ndim else ()
        offset += 4 * ndim
        (data_offset,) = _OFFSET.unpack_from(blob, offset)
        offset += _OFFSET.size
        raw_entries.append((name, _CODE_DTYPES[dtype_code], tuple(shape), data_offset))

    if offset + _OFFSET.size > len(blob):
        raise CheckpointFormatError(f"{path.name}: truncated payload length")
    (payload_len,) = _OFFSET.unpack_from(blob, offset)
    offset += _OFFSET.size
    if offset + payload_len > len(blob):
        raise CheckpointFormatError(f"{path.name}: truncated payload "
                                    f"({len(blob) - offset} of {payload_len} bytes)")

    seen: set[str] = set()
    arrays: dict[str, np.ndarray] = {}
    for name, dtype, shape, data_offset in raw_entries:
        if name in seen:
            raise CheckpointFormatError(f"{path.name}: duplicate entry {name!r}")
        seen.add(name)
        count = int(np.prod(shape, dtype=np.int64)) if shape else 1
        nbytes = count * np.dtype(dtype).itemsize
        if data_offset + nbytes > payload_len:
            raise CheckpointFormatError(
                f"{path.name}: entry {name!r} overruns payload (offset {data_offset}, {nbytes} bytes)")
        arr = np.frombuffer(blob, dtype=dtype, count=count,
                            offset=offset + data_offset).reshape(shape)
        arrays[name] = arr.astype(np.float64) if dtype == "<f8" else arr.copy()

    params = {n[len("param."):]: a for n, a in arrays.items() if n.startswith("param.")}
    buffers = {n[len("buffer."):]: a for n, a in arrays.items() if n.startswith("buffer.")}
    expected = set(spec.parameter_shapes())
    if set(params) != expected:
        raise CheckpointFormatError(
            f"{path.name}: parameter table mismatches spec "
            f"(missing {sorted(expected - set(params))}, extra {sorted(set(params) - expected)})")
    for name, shape in spec.parameter_shapes().items():
        if params[name].shape != shape:
            raise CheckpointFormatError(f"{path.name}: parameter {name!r} has shape "
                                        f"{params[name].shape}, spec says {shape}")

    optimizer: OptimizerState | None = None
    if opt_fields:
        optimizer = OptimizerState(
            kind=opt_fields["kind"],
            learning_rate=float(opt_fields["learning_rate"]),
            step_count=int(opt_fields["step_count"]),
            m={n[len("opt.m."):]: a for n, a in arrays.items() if n.startswith("opt.m.")},
            v={n[len("opt.v."):]: a for n, a in arrays.items() if n.startswith("opt.v.")},
        )
    return Checkpoint(spec=spec, params=params, buffers=buffers, optimizer=optimizer, meta=meta)
