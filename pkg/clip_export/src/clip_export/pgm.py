"""Binary PGM (P5) reader for projected depth maps.

Handles both sample widths the format allows: one byte when maxval is
below 256, two big-endian bytes otherwise (the projection toolkit writes
16-bit maps with maxval 65535). Values come back as float64 in [0, 1].
"""

from __future__ import annotations

from pathlib import Path

import numpy as np


class PgmError(ValueError):
    """File is not a well-formed binary PGM."""


def _tokens(raw: bytes):
    """Yield header tokens, skipping whitespace and # comments.

    Also yields the offset just past each token so the caller can find
    where the pixel payload starts.
    """
    i = 0
    while i < len(raw):
        c = raw[i:i + 1]
        if c in b" \t\r\n":
            i += 1
        elif c == b"#":
            while i < len(raw) and raw[i:i + 1] != b"\n":
                i += 1
        else:
            start = i
            while i < len(raw) and raw[i:i + 1] not in b" \t\r\n":
                i += 1
            yield raw[start:i], i
        i += 1 if i < len(raw) and raw[i:i + 1] in b" \t\r\n" else 0


def read_pgm(path: str | Path) -> np.ndarray:
    """Read a binary PGM into a (height, width) float array in [0, 1]."""
    raw = Path(path).read_bytes()
    fields: list[bytes] = []
    data_start = 0
    for token, end in _tokens(raw):
        fields.append(token)
        if len(fields) == 4:
            data_start = end + 1   # exactly one whitespace byte after maxval
            break
    if len(fields) < 4:
        raise PgmError(f"{path}: truncated header")
    if fields[0] != b"P5":
        raise PgmError(f"{path}: bad magic {fields[0]!r}, expected P5")
    try:
        width, height, maxval = (int(f) for f in fields[1:4])
    except ValueError:
        raise PgmError(f"{path}: non-numeric header field") from None
    if width < 1 or height < 1:
        raise PgmError(f"{path}: bad dimensions {width}x{height}")
    if not 0 < maxval < 65536:
        raise PgmError(f"{path}: maxval {maxval} out of range")

    n = width * height
    body = raw[data_start:]
    if maxval < 256:
        if len(body) != n:
            raise PgmError(f"{path}: expected {n} pixel bytes, got {len(body)}")
        samples = np.frombuffer(body, dtype=np.uint8)
    else:
        if len(body) != 2 * n:
            raise PgmError(f"{path}: expected {2 * n} pixel bytes, got {len(body)}")
        samples = np.frombuffer(body, dtype=">u2")
    return samples.astype(np.float64).reshape(height, width) / maxval
