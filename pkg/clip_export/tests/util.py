"""Shared helpers: hand-rolled PGM bytes, independent of any library."""

from __future__ import annotations

import numpy as np


def pgm16_bytes(values: np.ndarray) -> bytes:
    """Encode a float array in [0, 1] as a 16-bit binary PGM."""
    h, w = values.shape
    samples = np.rint(np.asarray(values) * 65535.0).astype(">u2")
    return f"P5\n{w} {h}\n65535\n".encode() + samples.tobytes()


def pgm8_bytes(values: np.ndarray) -> bytes:
    h, w = values.shape
    samples = np.rint(np.asarray(values) * 255.0).astype(np.uint8)
    return f"P5\n{w} {h}\n255\n".encode() + samples.tobytes()
