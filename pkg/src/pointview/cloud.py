"""Point-cloud ingestion, normalization, dataset manifests, and augmentation."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DomainError, EmptyCloudError, ParseError

XYZ_TEXT = "xyz_text"
XYZ_BIN_F32LE = "xyz_bin_f32le"
CLOUD_FORMATS = (XYZ_TEXT, XYZ_BIN_F32LE)

AUGMENT_RECIPES = ("scale_translate", "jitter_rotate")


@dataclass
class PointCloud:
    """An unordered set of 3D points plus a sample identifier.

    Points are held as a float64 (N, 3) array; N must be at least 1.
    """

    points: np.ndarray
    id: str = ""

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise DomainError(f"points must have shape (N, 3), got {pts.shape}")
        if pts.shape[0] == 0:
            raise EmptyCloudError("point cloud is empty")
        self.points = pts

    def __len__(self) -> int:
        return int(self.points.shape[0])


def sniff_format(path: str | Path) -> str:
    """Guess the on-disk cloud format from the file extension."""
    suffix = Path(path).suffix.lower()
    return XYZ_BIN_F32LE if suffix in (".xyzb", ".bin") else XYZ_TEXT


def load_cloud(path: str | Path, format: str = "auto", id: str | None = None) -> PointCloud:
    """Read a point cloud from disk.

    Formats:
      xyz_text      one whitespace-separated ``x y z`` triple per line
      xyz_bin_f32le consecutive little-endian float32 triples
      auto          pick by extension (.xyzb/.bin binary, anything else text)

    Raises ParseError on malformed content and EmptyCloudError when the
    file holds no points at all.
    """
    path = Path(path)
    if format == "auto":
        format = sniff_format(path)
    if format not in CLOUD_FORMATS:
        raise DomainError(f"unknown cloud format {format!r}, expected one of {CLOUD_FORMATS}")
    if format == XYZ_TEXT:
        rows = []
        for lineno, line in enumerate(path.read_text().splitlines(), start=1):
            stripped = line.strip()
            if not stripped:
                continue
            parts = stripped.split()
            if len(parts) != 3:
                raise ParseError(f"{path}:{lineno}: expected 3 values per line, got {len(parts)}")
            try:
                rows.append([float(p) for p in parts])
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from exc
        if not rows:
            raise EmptyCloudError(f"{path}: file holds no points")
        points = np.asarray(rows, dtype=np.float64)
    else:
        raw = path.read_bytes()
        if len(raw) == 0:
            raise EmptyCloudError(f"{path}: file holds no points")
        if len(raw) % 12 != 0:
            raise ParseError(f"{path}: {len(raw)} bytes is not a whole number of float32 triples")
        points = np.frombuffer(raw, dtype="<f4").astype(np.float64).reshape(-1, 3)
    return PointCloud(points, id=id if id is not None else path.stem)


def save_cloud(cloud: PointCloud, path: str | Path, format: str = "auto") -> None:
    """Write a cloud to disk in one of the formats accepted by load_cloud."""
    path = Path(path)
    if format == "auto":
        format = sniff_format(path)
    if format not in CLOUD_FORMATS:
        raise DomainError(f"unknown cloud format {format!r}, expected one of {CLOUD_FORMATS}")
    if format == XYZ_TEXT:
        lines = [" ".join(f"{v:.17g}" for v in row) for row in cloud.points]
        path.write_text("\n".join(lines) + "\n")
    else:
        path.write_bytes(np.ascontiguousarray(cloud.points, dtype="<f4").tobytes())


def normalize_unit_cube(cloud: PointCloud) -> PointCloud:
    """Center a cloud on its centroid and scale it into the [-1, 1] cube.

    The divisor is the largest absolute per-axis deviation from the centroid,
    so at least one output coordinate lands exactly on +/-1. A degenerate
    cloud (all points identical) collapses to the origin.
    """
    pts = cloud.points
    centroid = pts.mean(axis=0)
    shifted = pts - centroid
    m = np.abs(shifted).max()
    if m == 0.0:
        return PointCloud(np.zeros_like(pts), id=cloud.id)
    return PointCloud(shifted / m, id=cloud.id)


def augment(cloud: PointCloud, recipe: str, rng: np.random.Generator | int) -> PointCloud:
    """Apply a named random perturbation and return a new cloud.

    scale_translate: one uniform scale factor in [0.8, 1.25], then an
        independent per-axis translation in [-0.1, 0.1].
    jitter_rotate: per-point Gaussian jitter (sigma 0.01, clipped to
        +/-0.05 on each axis), then one rotation about the vertical (y)
        axis by an angle uniform in [0, 2*pi).
    """
    if recipe not in AUGMENT_RECIPES:
        raise DomainError(f"unknown augmentation {recipe!r}, expected one of {AUGMENT_RECIPES}")
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(int(rng))
    pts = cloud.points
    if recipe == "scale_translate":
        scale = rng.uniform(0.8, 1.25)
        shift = rng.uniform(-0.1, 0.1, size=3)
        out = pts * scale + shift
    else:
        noise = np.clip(rng.normal(0.0, 0.01, size=pts.shape), -0.05, 0.05)
        angle = rng.uniform(0.0, 2.0 * math.pi)
        c, s = math.cos(angle), math.sin(angle)
        rot = np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])
        out = (pts + noise) @ rot.T
    return PointCloud(out, id=cloud.id)


@dataclass(frozen=True)
class ManifestEntry:
    id: str
    path: str
    label: int


@dataclass
class DatasetManifest:
    """Labeled sample listing plus the ordered class-name vocabulary."""

    entries: list[ManifestEntry]
    class_names: list[str]

    def __post_init__(self) -> None:
        if len(set(self.class_names)) != len(self.class_names):
            raise DomainError("class names must be unique")
        seen: set[str] = set()
        k = len(self.class_names)
        for e in self.entries:
            if e.id in seen:
                raise DomainError(f"duplicate sample id {e.id!r}")
            seen.add(e.id)
            if not 0 <= e.label < k:
                raise DomainError(f"sample {e.id!r}: label {e.label} outside [0, {k})")

    def __len__(self) -> int:
        return len(self.entries)

    def labels(self) -> np.ndarray:
        return np.array([e.label for e in self.entries], dtype=np.int64)


def read_manifest(manifest_path: str | Path, classes_path: str | Path) -> DatasetManifest:
    """Load a JSON-lines manifest plus its class-names file.

    Each manifest line is an object with "id", "path", and "label" fields;
    relative sample paths are resolved against the manifest's directory.
    The class file lists one name per line, in label order.
    """
    manifest_path = Path(manifest_path)
    names = [ln.strip() for ln in Path(classes_path).read_text().splitlines() if ln.strip()]
    if not names:
        raise ParseError(f"{classes_path}: no class names")
    entries = []
    for lineno, line in enumerate(manifest_path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            sample_id, rel, label = obj["id"], obj["path"], int(obj["label"])
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"{manifest_path}:{lineno}: {exc}") from exc
        p = Path(rel)
        if not p.is_absolute():
            p = manifest_path.parent / p
        entries.append(ManifestEntry(str(sample_id), str(p), label))
    return DatasetManifest(entries, names)


def write_manifest(manifest: DatasetManifest, manifest_path: str | Path,
                   classes_path: str | Path) -> None:
    """Write the JSON-lines manifest and the class-names file."""
    lines = [json.dumps({"id": e.id, "path": e.path, "label": e.label}) for e in manifest.entries]
    Path(manifest_path).write_text("\n".join(lines) + ("\n" if lines else ""))
    Path(classes_path).write_text("\n".join(manifest.class_names) + "\n")


def kshot_sample(manifest: DatasetManifest, k: int, seed: int) -> DatasetManifest:
    """Draw up to k samples per class, uniformly without replacement.

    Classes with fewer than k samples contribute all of them. The output
    keeps the input's class vocabulary and orders entries by class index,
    then by original manifest position. Deterministic in (manifest, k, seed).
    """
    if k < 1:
        raise DomainError(f"k must be >= 1, got {k}")
    if not manifest.entries:
        raise DomainError("cannot sample from an empty manifest")
    rng = np.random.default_rng(seed)
    chosen: list[ManifestEntry] = []
    for label in range(len(manifest.class_names)):
        idx = [i for i, e in enumerate(manifest.entries) if e.label == label]
        if not idx:
            continue
        take = min(k, len(idx))
        picked = rng.choice(len(idx), size=take, replace=False)
        chosen.extend(manifest.entries[idx[i]] for i in sorted(picked))
    return DatasetManifest(chosen, list(manifest.class_names))
