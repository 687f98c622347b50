"""Seeded synthetic shape clouds for demos and self-contained evaluation.

Four geometrically distinct classes: points on a unit sphere shell, on the
surface of a cube, on a flat square, and along a diagonal line segment.
Each sample gets its own point draw, a random rotation about the vertical
axis, and a mild random scale, so samples within a class vary while the
classes stay separable from silhouette alone.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .cloud import (DatasetManifest, ManifestEntry, PointCloud, XYZ_BIN_F32LE,
                    save_cloud, write_manifest)
from .errors import DomainError

SHAPE_CLASSES = ("sphere", "cube", "plane", "line")

_EXTENSIONS = {XYZ_BIN_F32LE: ".xyzb"}


def sample_shape(kind: str, n_points: int, rng: np.random.Generator) -> np.ndarray:
    """Draw n_points on the named canonical shape, as a (N, 3) array."""
    if kind == "sphere":
        g = rng.standard_normal((n_points, 3))
        norms = np.linalg.norm(g, axis=1, keepdims=True)
        norms[norms == 0.0] = 1.0
        return g / norms
    if kind == "cube":
        face = rng.integers(0, 6, size=n_points)
        uv = rng.uniform(-1.0, 1.0, size=(n_points, 2))
        pts = np.empty((n_points, 3))
        axis = face // 2
        sign = np.where(face % 2 == 0, 1.0, -1.0)
        for i in range(n_points):
            rest = [j for j in range(3) if j != axis[i]]
            pts[i, axis[i]] = sign[i]
            pts[i, rest[0]] = uv[i, 0]
            pts[i, rest[1]] = uv[i, 1]
        return pts
    if kind == "plane":
        xz = rng.uniform(-1.0, 1.0, size=(n_points, 2))
        return np.stack([xz[:, 0], np.zeros(n_points), xz[:, 1]], axis=1)
    if kind == "line":
        t = rng.uniform(-1.0, 1.0, size=n_points)
        direction = np.array([1.0, 1.0, 1.0]) / math.sqrt(3.0)
        return t[:, None] * direction
    raise DomainError(f"unknown shape {kind!r}, expected one of {SHAPE_CLASSES}")


def make_cloud(kind: str, n_points: int, rng: np.random.Generator,
               sample_id: str = "") -> PointCloud:
    """One posed sample: shape points, a random yaw, and a random scale."""
    pts = sample_shape(kind, n_points, rng)
    angle = rng.uniform(0.0, 2.0 * math.pi)
    c, s = math.cos(angle), math.sin(angle)
    rot = np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])
    scale = rng.uniform(0.75, 1.0)
    return PointCloud(pts @ rot.T * scale, id=sample_id)


def make_dataset(root: str | Path, train_per_class: int, test_per_class: int,
                 n_points: int = 256, seed: int = 0,
                 format: str = XYZ_BIN_F32LE) -> tuple[DatasetManifest, DatasetManifest]:
    """Materialize a balanced dataset under root and return both manifests.

    Writes train/ and test/ cloud files, train.jsonl and test.jsonl with
    paths relative to root, and classes.txt. Deterministic in the seed.
    """
    root = Path(root)
    rng = np.random.default_rng(seed)
    ext = _EXTENSIONS.get(format, ".xyz")
    manifests = {}
    for split, per_class in (("train", train_per_class), ("test", test_per_class)):
        split_dir = root / split
        split_dir.mkdir(parents=True, exist_ok=True)
        entries = []
        for label, kind in enumerate(SHAPE_CLASSES):
            for i in range(per_class):
                sample_id = f"{split}_{kind}_{i:04d}"
                cloud = make_cloud(kind, n_points, rng, sample_id)
                rel = f"{split}/{sample_id}{ext}"
                save_cloud(cloud, root / rel, format)
                entries.append(ManifestEntry(sample_id, rel, label))
        manifests[split] = DatasetManifest(entries, list(SHAPE_CLASSES))
        write_manifest(manifests[split], root / f"{split}.jsonl", root / "classes.txt")
    # re-read style resolution: manifests carry paths relative to their file
    resolved = {}
    for split in ("train", "test"):
        entries = [ManifestEntry(e.id, str(root / e.path), e.label)
                   for e in manifests[split].entries]
        resolved[split] = DatasetManifest(entries, list(SHAPE_CLASSES))
    return resolved["train"], resolved["test"]
