"""Checkpoints, CSV reports and the JSON sidecar.

Checkpoint layout (all little-endian)::

    b"STRA1"
    u32 header length, header bytes (sorted-key JSON: cfg, step, extrema names)
    f64 t, u64 step
    u32 array count, then per array: u32 ndim, ndim x u64 shape, u64 count,
        count complex128 values (real, imag interleaved)
    u32 extrema count, f64 values

Floats never pass through decimal text in the checkpoint, so a resumed run
restarts from exactly the same bits.
"""
from __future__ import annotations

import hashlib
import io
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..dynamics import StateVector
from .config import RunConfig

MAGIC = b"STRA1"


@dataclass
class Checkpoint:
    cfg: RunConfig
    step: int
    state: StateVector
    extrema: dict = field(default_factory=dict)

    @property
    def t(self) -> float:
        return self.state.t


def _write_array(buf, a: np.ndarray):
    a = np.ascontiguousarray(a, dtype="<c16")
    buf.write(struct.pack("<I", a.ndim))
    buf.write(struct.pack(f"<{a.ndim}Q", *a.shape))
    buf.write(struct.pack("<Q", a.size))
    buf.write(a.tobytes())


def _read_exact(buf, n: int) -> bytes:
    data = buf.read(n)
    if len(data) != n:
        raise ValueError("truncated checkpoint")
    return data


def _read_array(buf) -> np.ndarray:
    (ndim,) = struct.unpack("<I", _read_exact(buf, 4))
    shape = struct.unpack(f"<{ndim}Q", _read_exact(buf, 8 * ndim))
    (count,) = struct.unpack("<Q", _read_exact(buf, 8))
    if count != int(np.prod(shape, dtype=np.int64)):
        raise ValueError("array size does not match its shape")
    data = np.frombuffer(_read_exact(buf, 16 * count), dtype="<c16")
    return data.reshape(shape).astype(complex)


def checkpoint_bytes(ck: Checkpoint) -> bytes:
    names = sorted(ck.extrema)
    header = json.dumps({"cfg": ck.cfg.to_dict(), "step": ck.step, "extrema": names},
                        sort_keys=True).encode()
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<I", len(header)))
    buf.write(header)
    buf.write(struct.pack("<dQ", float(ck.state.t), ck.step))
    arrays = ck.state.arrays()
    buf.write(struct.pack("<I", len(arrays)))
    for a in arrays:
        _write_array(buf, a)
    buf.write(struct.pack("<I", len(names)))
    buf.write(struct.pack(f"<{len(names)}d", *(float(ck.extrema[n]) for n in names)))
    return buf.getvalue()


def parse_checkpoint(data: bytes) -> Checkpoint:
    buf = io.BytesIO(data)
    if _read_exact(buf, len(MAGIC)) != MAGIC:
        raise ValueError("not a checkpoint (bad magic bytes)")
    (hlen,) = struct.unpack("<I", _read_exact(buf, 4))
    header = json.loads(_read_exact(buf, hlen))
    t, step = struct.unpack("<dQ", _read_exact(buf, 16))
    if step != header["step"]:
        raise ValueError("inconsistent step counter in checkpoint")
    (n_arr,) = struct.unpack("<I", _read_exact(buf, 4))
    if n_arr != 3:
        raise ValueError(f"expected 3 coefficient arrays, found {n_arr}")
    arrays = tuple(_read_array(buf) for _ in range(n_arr))
    (n_ext,) = struct.unpack("<I", _read_exact(buf, 4))
    names = header["extrema"]
    if n_ext != len(names):
        raise ValueError("extrema count does not match header")
    values = struct.unpack(f"<{n_ext}d", _read_exact(buf, 8 * n_ext))
    if buf.read(1):
        raise ValueError("trailing bytes in checkpoint")
    cfg = RunConfig.from_dict(header["cfg"])
    return Checkpoint(cfg, step, StateVector.from_arrays(arrays, t), dict(zip(names, values)))


def save_checkpoint(path: str | Path, ck: Checkpoint) -> bytes:
    data = checkpoint_bytes(ck)
    Path(path).write_bytes(data)
    return data


def load_checkpoint(path: str | Path) -> Checkpoint:
    return parse_checkpoint(Path(path).read_bytes())


# ---------------------------------------------------------------------------
# text outputs


def format_value(v) -> str:
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return repr(float(v))


def csv_line(row: dict, columns) -> str:
    return ",".join(format_value(row[c]) for c in columns) + "\n"


def read_csv(path: str | Path):
    """Return ``(columns, rows)`` with float values."""
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise ValueError("empty CSV")
    columns = lines[0].split(",")
    rows = [dict(zip(columns, map(float, ln.split(",")))) for ln in lines[1:] if ln]
    return columns, rows


def blob_hash(data: bytes) -> str:
    """Git-style content hash (SHA-1 of ``"blob <len>\\0" + data``)."""
    h = hashlib.sha1()
    h.update(b"blob %d\0" % len(data))
    h.update(data)
    return h.hexdigest()


def _json_safe(obj):
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if np.isfinite(v) else repr(v)
    return obj


def sidecar_text(payload: dict) -> str:
    return json.dumps(_json_safe(payload), sort_keys=True, indent=2) + "\n"
