"""Embedding store files: magic PCEM, version 1.

Layout, all integers and floats little-endian:

    magic   4 bytes  b"PCEM"
    version u8       1
    count   u32
    dim     u32
    rows    count times: u32 key length, UTF-8 key, dim float32 values

The writer here is intentionally independent of the consuming toolkit;
agreement is byte-level, checked in tests against hand-computed layouts.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"PCEM"
VERSION = 1


class PcemError(ValueError):
    """Store file or row set violates the format."""


def write_pcem(rows: list[tuple[str, np.ndarray]], path: str | Path) -> int:
    """Write (key, vector) rows in order; returns the embedding width.

    All vectors must share one length; keys must be unique and non-empty.
    Values are stored as float32 regardless of input dtype.
    """
    if not rows:
        raise PcemError("refusing to write an empty store")
    dim = len(np.asarray(rows[0][1]).ravel())
    seen: set[str] = set()
    payload = [MAGIC, struct.pack("<BII", VERSION, len(rows), dim)]
    for key, vec in rows:
        if not key:
            raise PcemError("empty key")
        if key in seen:
            raise PcemError(f"duplicate key {key!r}")
        seen.add(key)
        v = np.asarray(vec, dtype=np.float32).ravel()
        if len(v) != dim:
            raise PcemError(
                f"key {key!r} has width {len(v)}, expected {dim}")
        kb = key.encode("utf-8")
        payload.append(struct.pack("<I", len(kb)))
        payload.append(kb)
        payload.append(v.astype("<f4").tobytes())
    Path(path).write_bytes(b"".join(payload))
    return dim


def read_pcem(path: str | Path) -> list[tuple[str, np.ndarray]]:
    """Read a store back as (key, float32 vector) rows in file order."""
    raw = Path(path).read_bytes()
    if raw[:4] != MAGIC:
        raise PcemError(f"bad magic {raw[:4]!r}")
    if len(raw) < 13:
        raise PcemError("truncated header")
    version, count, dim = struct.unpack_from("<BII", raw, 4)
    if version != VERSION:
        raise PcemError(f"unsupported version {version}")
    off = 13
    rows: list[tuple[str, np.ndarray]] = []
    seen: set[str] = set()
    for _ in range(count):
        if off + 4 > len(raw):
            raise PcemError("truncated row header")
        (klen,) = struct.unpack_from("<I", raw, off)
        off += 4
        end = off + klen + 4 * dim
        if end > len(raw):
            raise PcemError("truncated row")
        key = raw[off:off + klen].decode("utf-8")
        if key in seen:
            raise PcemError(f"duplicate key {key!r}")
        seen.add(key)
        vec = np.frombuffer(raw, dtype="<f4", count=dim, offset=off + klen)
        rows.append((key, vec.copy()))
        off = end
    if off != len(raw):
        raise PcemError(f"{len(raw) - off} trailing bytes")
    return rows
