"""Fuse logits tables from two models and search the blend ratio."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AlignmentError, DomainError
from .zeroshot import LogitsTable, softmax


def _aligned_rows(a: LogitsTable, b: LogitsTable) -> np.ndarray:
    """B's rows reordered to A's id order, after full alignment checks."""
    if a.class_names != b.class_names:
        raise AlignmentError(f"class names differ: {a.class_names!r} vs {b.class_names!r}")
    index = {sample_id: i for i, sample_id in enumerate(b.ids)}
    for sample_id in a.ids:
        if sample_id not in index:
            raise AlignmentError(f"sample {sample_id!r} is missing from the second table")
    if len(b.ids) != len(a.ids):
        extra = next(s for s in b.ids if s not in set(a.ids))
        raise AlignmentError(f"sample {extra!r} appears only in the second table")
    order = np.array([index[s] for s in a.ids], dtype=np.int64)
    if not np.array_equal(b.labels[order], a.labels):
        off = a.ids[int(np.nonzero(b.labels[order] != a.labels)[0][0])]
        raise AlignmentError(f"sample {off!r} carries different labels in the two tables")
    return b.rows[order]


def fuse(a: LogitsTable, b: LogitsTable, ratio: float,
         softmax_space: bool = False) -> LogitsTable:
    """Blend two aligned tables as ratio*A + (1-ratio)*B.

    Tables are joined on sample id (order-insensitive); ids, labels, and
    class names must agree. ratio=1 reproduces A and ratio=0 reproduces B.
    With softmax_space=True each row is converted to probabilities before
    blending; the default blends raw logits.
    """
    if not 0.0 <= ratio <= 1.0:
        raise DomainError(f"ratio must lie in [0, 1], got {ratio}")
    rows_b = _aligned_rows(a, b)
    rows_a = a.rows
    if softmax_space:
        rows_a = np.apply_along_axis(softmax, 1, rows_a)
        rows_b = np.apply_along_axis(softmax, 1, rows_b)
    fused = ratio * rows_a + (1.0 - ratio) * rows_b
    return LogitsTable(list(a.ids), a.labels.copy(), fused, list(a.class_names))


def logit_stats(table: LogitsTable) -> dict[str, float]:
    """Summary statistics of a table's raw logit values."""
    r = table.rows
    return {"mean": float(r.mean()), "std": float(r.std()),
            "min": float(r.min()), "max": float(r.max())}


@dataclass(frozen=True)
class RatioSearchResult:
    best_ratio: float
    best_accuracy: float
    curve: list[tuple[float, float]]


def search_ratio(a: LogitsTable, b: LogitsTable, step: float = 0.05,
                 softmax_space: bool = False) -> RatioSearchResult:
    """Grid-search the blend ratio on [0, 1] and keep the most accurate.

    The grid walks 0, step, ..., 1 in ascending order and ties keep the
    smallest ratio, so results are deterministic.
    """
    if not 0.0 < step <= 1.0:
        raise DomainError(f"step must lie in (0, 1], got {step}")
    n = round(1.0 / step)
    curve = []
    best_ratio, best_acc = 0.0, -1.0
    for i in range(n + 1):
        ratio = i / n
        acc = fuse(a, b, ratio, softmax_space=softmax_space).accuracy()
        curve.append((ratio, acc))
        if acc > best_acc:
            best_ratio, best_acc = ratio, acc
    return RatioSearchResult(best_ratio, best_acc, curve)
