"""Zero-shot classification from per-view features and a frozen classifier.

Each view feature is scored against the classifier rows by scaled cosine
similarity, per-view logit vectors are combined as a weighted sum, and the
argmax (lowest index on ties) picks the class. Nothing here is trained.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .cloud import DatasetManifest, load_cloud, normalize_unit_cube
from .errors import DomainError, ParseError, PointViewError
from .features import get_feature, l2_normalize, l2_normalize_rows
from .projection import ProjectionSettings, ViewFrame, project_all

THREADS_ENV = "POINTVIEW_THREADS"

# Hand-tuned per-view weights for the six axis-aligned views, keyed by the
# benchmark each set was tuned on.
VIEW_WEIGHT_PRESETS = {
    "mn10": (2.0, 5.0, 7.0, 10.0, 5.0, 6.0),
    "mn40": (3.0, 9.0, 5.0, 4.0, 5.0, 4.0),
    "sonn": (3.0, 10.0, 7.0, 4.0, 1.0, 0.0),
}

DEFAULT_LOGIT_SCALE = 100.0


def resolve_threads(requested: int | None = None) -> int:
    """Worker count for per-sample fan-out.

    Explicit argument wins; otherwise the POINTVIEW_THREADS environment
    variable applies, where 0 means one worker per CPU. Default is 1.
    """
    if requested is None:
        raw = os.environ.get(THREADS_ENV, "")
        if not raw.strip():
            return 1
        try:
            requested = int(raw)
        except ValueError as exc:
            raise DomainError(f"{THREADS_ENV} must be an integer, got {raw!r}") from exc
    if requested < 0:
        raise DomainError(f"thread count must be >= 0, got {requested}")
    if requested == 0:
        return os.cpu_count() or 1
    return requested


def view_logits(feature: np.ndarray, classifier: np.ndarray,
                scale: float = DEFAULT_LOGIT_SCALE, normalize: bool = True) -> np.ndarray:
    """Score one view feature against every classifier row.

    With normalization on (the default) this is scale * cosine similarity;
    with scale=1 and normalization off it is the plain inner product.
    """
    f = np.asarray(feature, dtype=np.float64)
    w = np.asarray(classifier, dtype=np.float64)
    if f.ndim != 1 or w.ndim != 2 or w.shape[1] != f.shape[0]:
        raise DomainError(f"feature {f.shape} does not match classifier {w.shape}")
    if normalize:
        f = l2_normalize(f)
        w = l2_normalize_rows(w)
    return scale * (w @ f)


def aggregate(per_view_logits: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Weighted sum of per-view logit rows: sum_i weights[i] * logits[i]."""
    lv = np.asarray(per_view_logits, dtype=np.float64)
    a = np.asarray(weights, dtype=np.float64)
    if lv.ndim != 2 or lv.shape[0] < 1:
        raise DomainError(f"per-view logits must be (M, K) with M >= 1, got {lv.shape}")
    if a.shape != (lv.shape[0],):
        raise DomainError(f"got {a.shape[0] if a.ndim == 1 else a.shape} weights for {lv.shape[0]} views")
    return a @ lv


def softmax(logits: np.ndarray) -> np.ndarray:
    """Numerically stable softmax over a 1D logit vector."""
    z = np.asarray(logits, dtype=np.float64)
    e = np.exp(z - z.max())
    return e / e.sum()


@dataclass
class LogitsTable:
    """Per-sample aggregated logits plus ids, labels, and class names."""

    ids: list[str]
    labels: np.ndarray
    rows: np.ndarray
    class_names: list[str]

    def __post_init__(self) -> None:
        self.labels = np.asarray(self.labels, dtype=np.int64)
        self.rows = np.asarray(self.rows, dtype=np.float64)
        n, k = len(self.ids), len(self.class_names)
        if self.rows.shape != (n, k):
            raise DomainError(f"rows must be ({n}, {k}), got {self.rows.shape}")
        if self.labels.shape != (n,):
            raise DomainError(f"labels must be ({n},), got {self.labels.shape}")
        if len(set(self.ids)) != n:
            raise DomainError("sample ids must be unique")
        if n and not (0 <= self.labels.min() and self.labels.max() < k):
            raise DomainError("labels fall outside the class range")

    def __len__(self) -> int:
        return len(self.ids)

    def predictions(self) -> np.ndarray:
        """Argmax per row; ties resolve to the lowest class index."""
        return self.rows.argmax(axis=1)

    def accuracy(self) -> float:
        if not self.ids:
            raise DomainError("accuracy of an empty table is undefined")
        return float((self.predictions() == self.labels).mean())

    def per_class_accuracy(self) -> dict[str, float]:
        """Accuracy per class name; classes with no samples map to nan."""
        preds = self.predictions() if len(self.ids) else np.empty(0, dtype=np.int64)
        out: dict[str, float] = {}
        for k, name in enumerate(self.class_names):
            mask = self.labels == k
            out[name] = float((preds[mask] == k).mean()) if mask.any() else math.nan
        return out


def write_logits_csv(table: LogitsTable, path) -> None:
    """Emit "id,label,<class...>" rows; logits carry 9 significant digits."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "label", *table.class_names])
        for i, sample_id in enumerate(table.ids):
            writer.writerow([sample_id, int(table.labels[i]),
                             *(f"{v:.9g}" for v in table.rows[i])])


def read_logits_csv(path) -> LogitsTable:
    """Parse a table written by write_logits_csv."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty logits file") from None
        if len(header) < 3 or header[0] != "id" or header[1] != "label":
            raise ParseError(f"{path}: header must start with id,label followed by class names")
        class_names = header[2:]
        ids, labels, rows = [], [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                labels.append(int(row[1]))
                rows.append([float(v) for v in row[2:]])
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from exc
            ids.append(row[0])
    return LogitsTable(ids, np.array(labels, dtype=np.int64),
                       np.array(rows, dtype=np.float64).reshape(len(ids), len(class_names)),
                       class_names)


@dataclass
class EvalResult:
    accuracy: float
    per_class: dict[str, float]
    table: LogitsTable


def evaluate(manifest: DatasetManifest, provider, classifier: np.ndarray,
             views: list[ViewFrame], settings: ProjectionSettings,
             weights: np.ndarray | None = None, *,
             scale: float = DEFAULT_LOGIT_SCALE, normalize: bool = True,
             feature_transform: Callable[[np.ndarray], np.ndarray] | None = None,
             cloud_format: str = "auto", threads: int | None = None) -> EvalResult:
    """Classify every manifest sample and report accuracy.

    Per sample: load the cloud, normalize it, project all views, fetch one
    feature per view, optionally transform the (M, C) feature block, score
    each view against the classifier, and aggregate with the view weights
    (all ones when omitted). Providers that ignore depth maps skip the
    load/project step entirely.

    Sample work may fan out across threads (see resolve_threads); results
    are reduced in manifest order so the outcome does not depend on the
    worker count. Any per-sample failure aborts with the sample id attached.
    """
    if not manifest.entries:
        raise DomainError("cannot evaluate an empty manifest")
    w = np.asarray(classifier, dtype=np.float64)
    k = len(manifest.class_names)
    if w.ndim != 2 or w.shape[0] != k:
        raise DomainError(f"classifier must have {k} rows, got shape {w.shape}")
    m = len(views)
    if m < 1:
        raise DomainError("at least one view is required")
    alpha = np.ones(m) if weights is None else np.asarray(weights, dtype=np.float64)
    if alpha.shape != (m,):
        raise DomainError(f"got {alpha.size} view weights for {m} views")
    if not np.any(alpha > 0.0):
        raise DomainError("at least one view weight must be positive")

    wn = l2_normalize_rows(w) if normalize else w

    def row_for(entry) -> np.ndarray:
        try:
            if provider.needs_maps:
                cloud = normalize_unit_cube(load_cloud(entry.path, cloud_format, id=entry.id))
                maps = project_all(cloud, views, settings)
            else:
                maps = [None] * m
            feats = np.stack([get_feature(provider, entry.id, v.name, dm)
                              for v, dm in zip(views, maps)])
        except PointViewError as exc:
            raise type(exc)(f"sample {entry.id!r}: {exc}") from exc
        if feats.shape != (m, wn.shape[1]):
            raise DomainError(f"sample {entry.id!r}: features {feats.shape} do not match "
                              f"classifier width {wn.shape[1]}")
        if feature_transform is not None:
            feats = np.asarray(feature_transform(feats), dtype=np.float64)
            if feats.shape != (m, wn.shape[1]):
                raise DomainError(f"sample {entry.id!r}: transform returned shape {feats.shape}")
        if normalize:
            norms = np.linalg.norm(feats, axis=1, keepdims=True)
            feats = feats / np.where(norms > 0.0, norms, 1.0)
        per_view = scale * (feats @ wn.T)
        return aggregate(per_view, alpha)

    n_workers = resolve_threads(threads)
    if n_workers > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            rows = list(pool.map(row_for, manifest.entries))
    else:
        rows = [row_for(e) for e in manifest.entries]

    table = LogitsTable([e.id for e in manifest.entries], manifest.labels(),
                        np.stack(rows), list(manifest.class_names))
    return EvalResult(table.accuracy(), table.per_class_accuracy(), table)
