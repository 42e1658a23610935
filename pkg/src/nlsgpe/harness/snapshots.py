"""Binary field snapshots and the run manifest.

Layout (little-endian)::

    magic   4 bytes  b"NLSF"
    version u32
    dim     u32
    J       u64 per axis (intervals; the array holds J+1 nodes per axis)
    a, b    f64 pair per axis
    t       f64
    data    (re, im) f64 pairs in row-major node order
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..core import Axis, BC, Grid, WaveField

__all__ = ["MAGIC", "VERSION", "Snapshot", "write_snapshot", "read_snapshot", "encode_field",
           "decode_field", "write_manifest", "read_manifest"]

MAGIC = b"NLSF"
VERSION = 1


def encode_field(field: WaveField) -> bytes:
    grid = field.grid
    parts = [MAGIC, struct.pack("<II", VERSION, grid.dim)]
    parts += [struct.pack("<Q", ax.J) for ax in grid.axes]
    parts += [struct.pack("<dd", ax.a, ax.b) for ax in grid.axes]
    parts.append(struct.pack("<d", field.t))
    data = np.ascontiguousarray(field.values, dtype="<c16")
    parts.append(data.tobytes(order="C"))
    return b"".join(parts)


def decode_field(buf: bytes, bc=BC.DIRICHLET) -> WaveField:
    """Inverse of :func:`encode_field`; the boundary condition is not stored, so pass it in."""
    if buf[:4] != MAGIC:
        raise ValueError("not an NLSF snapshot (bad magic)")
    version, dim = struct.unpack_from("<II", buf, 4)
    if version != VERSION:
        raise ValueError(f"unsupported snapshot version {version}")
    if dim not in (1, 2):
        raise ValueError(f"bad dimension {dim}")
    off = 12
    Js = struct.unpack_from("<" + "Q" * dim, buf, off)
    off += 8 * dim
    bounds = struct.unpack_from("<" + "d" * (2 * dim), buf, off)
    off += 16 * dim
    (t,) = struct.unpack_from("<d", buf, off)
    off += 8
    shape = tuple(int(J) + 1 for J in Js)
    n = int(np.prod(shape))
    if len(buf) - off != 16 * n:
        raise ValueError("snapshot payload size does not match its header")
    values = np.frombuffer(buf, dtype="<c16", count=n, offset=off).reshape(shape).astype(complex)
    bcs = [bc] * dim if isinstance(bc, (str, BC)) else list(bc)
    axes = tuple(Axis(bounds[2 * i], bounds[2 * i + 1], int(Js[i]), BC(bcs[i])) for i in range(dim))
    return WaveField(Grid(axes), values, t)


@dataclass(frozen=True)
class Snapshot:
    path: Path
    t: float
    step: int
    component: int = 1


def write_snapshot(path, field: WaveField) -> Path:
    path = Path(path)
    path.write_bytes(encode_field(field))
    return path


def read_snapshot(path, bc=BC.DIRICHLET) -> WaveField:
    return decode_field(Path(path).read_bytes(), bc)


def write_manifest(out_dir, metadata: dict, snapshots: list[Snapshot]) -> Path:
    out_dir = Path(out_dir)
    record = dict(metadata)
    record["snapshots"] = [
        {"file": s.path.name, "t": s.t, "step": s.step, "component": s.component} for s in snapshots
    ]
    p = out_dir / "manifest.json"
    p.write_text(json.dumps(record, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return p


def read_manifest(out_dir) -> dict:
    return json.loads((Path(out_dir) / "manifest.json").read_text(encoding="utf-8"))
