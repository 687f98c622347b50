"""Embedding stores and feature providers.

Pretrained encoders never run inside this package. Their output crosses a
binary file boundary (the .pcem embedding store) and everything downstream
consumes plain float vectors. A deterministic toy encoder stands in for a
real one so pipelines run end to end without any model weights.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import DomainError, FeatureLookupError, FormatError
from .projection import DepthMap

STORE_MAGIC = b"PCEM"
STORE_VERSION = 1

TOY_INPUT_SIDE = 224
_POOLED_SIDE = 32
_POOLED_LEN = _POOLED_SIDE * _POOLED_SIDE


class EmbeddingStore:
    """Ordered map from string keys to float32 feature rows of one width.

    Keys are free-form; pipelines use "<sample_id>/<view_name>" for view
    features and bare class names for classifier rows.
    """

    def __init__(self, dim: int):
        if dim < 1:
            raise DomainError(f"dim must be >= 1, got {dim}")
        self.dim = int(dim)
        self._keys: list[str] = []
        self._rows: dict[str, np.ndarray] = {}

    def add(self, key: str, vector: np.ndarray) -> None:
        if key in self._rows:
            raise DomainError(f"duplicate store key {key!r}")
        row = np.asarray(vector, dtype=np.float32).reshape(-1)
        if row.shape[0] != self.dim:
            raise DomainError(f"key {key!r}: expected {self.dim} values, got {row.shape[0]}")
        self._keys.append(key)
        self._rows[key] = row

    def get(self, key: str) -> np.ndarray:
        if key not in self._rows:
            raise FeatureLookupError(f"store has no row for key {key!r}")
        return self._rows[key].copy()

    def keys(self) -> list[str]:
        return list(self._keys)

    def matrix(self) -> np.ndarray:
        """All rows stacked in insertion order, shape (len, dim) float32."""
        return np.stack([self._rows[k] for k in self._keys]) if self._keys \
            else np.empty((0, self.dim), dtype=np.float32)

    def __len__(self) -> int:
        return len(self._keys)

    def __contains__(self, key: str) -> bool:
        return key in self._rows


def store_write(store: EmbeddingStore, path: str | Path) -> None:
    """Serialize a store.

    Layout: magic "PCEM", version u8 = 1, row count u32 LE, dim u32 LE,
    then per row a u32 LE key byte length, the UTF-8 key, and dim float32
    LE values. Writing the same store twice yields identical bytes.
    """
    parts = [STORE_MAGIC, struct.pack("<B", STORE_VERSION),
             struct.pack("<II", len(store), store.dim)]
    for key in store.keys():
        encoded = key.encode("utf-8")
        parts.append(struct.pack("<I", len(encoded)))
        parts.append(encoded)
        parts.append(store.get(key).astype("<f4").tobytes())
    Path(path).write_bytes(b"".join(parts))


def store_read(path: str | Path) -> EmbeddingStore:
    """Read a store written by store_write; bit-exact round trip."""
    data = Path(path).read_bytes()
    pos = 0

    def need(n: int, what: str) -> bytes:
        nonlocal pos
        if pos + n > len(data):
            raise FormatError(f"{path}: truncated while reading {what}")
        chunk = data[pos:pos + n]
        pos += n
        return chunk

    if need(4, "magic") != STORE_MAGIC:
        raise FormatError(f"{path}: bad magic, not an embedding store")
    version = need(1, "version")[0]
    if version != STORE_VERSION:
        raise FormatError(f"{path}: unsupported store version {version}")
    count, dim = struct.unpack("<II", need(8, "header"))
    if dim < 1:
        raise FormatError(f"{path}: dim must be >= 1, got {dim}")
    store = EmbeddingStore(dim)
    for i in range(count):
        (key_len,) = struct.unpack("<I", need(4, f"key length of row {i}"))
        key = need(key_len, f"key of row {i}").decode("utf-8")
        row = np.frombuffer(need(4 * dim, f"values of row {i}"), dtype="<f4")
        if key in store:
            raise FormatError(f"{path}: duplicate key {key!r}")
        store.add(key, row)
    if pos != len(data):
        raise FormatError(f"{path}: {len(data) - pos} trailing bytes after last row")
    return store


def classifier_matrix(store: EmbeddingStore, class_names: list[str]) -> np.ndarray:
    """Stack classifier rows in class order, validating the key set.

    The store must hold exactly the class names, in the same order.
    Returns a (K, dim) float64 matrix.
    """
    if store.keys() != list(class_names):
        raise DomainError(
            f"classifier store keys {store.keys()!r} do not match class names {list(class_names)!r}")
    return store.matrix().astype(np.float64)


def _pool_map(depth_map: DepthMap | np.ndarray) -> np.ndarray:
    v = depth_map.values if isinstance(depth_map, DepthMap) else np.asarray(depth_map, dtype=np.float64)
    if v.shape != (TOY_INPUT_SIDE, TOY_INPUT_SIDE):
        raise DomainError(f"toy encoder expects a {TOY_INPUT_SIDE}x{TOY_INPUT_SIDE} map, got {v.shape}")
    block = TOY_INPUT_SIDE // _POOLED_SIDE
    pooled = v.reshape(_POOLED_SIDE, block, _POOLED_SIDE, block).mean(axis=(1, 3))
    return pooled.reshape(_POOLED_LEN)


def toy_encode(depth_map: DepthMap | np.ndarray, seed: int, dim: int) -> np.ndarray:
    """Deterministic stand-in visual encoder.

    Average-pools a 224x224 map to 32x32, flattens, applies a seeded random
    1024 -> dim projection scaled by 1/sqrt(1024), adds a seeded bias, and
    rectifies. Pure in (map values, seed, dim).
    """
    if dim < 1:
        raise DomainError(f"dim must be >= 1, got {dim}")
    x = _pool_map(depth_map)
    rng = np.random.default_rng(seed)
    w = rng.standard_normal((dim, _POOLED_LEN)) / 32.0
    # Bias at the same 1/sqrt(1024) scale as the projection rows; a unit-scale
    # bias would drown the map signal and make every feature nearly collinear.
    b = rng.standard_normal(dim) / 32.0
    return np.maximum(w @ x + b, 0.0)


class ToyProvider:
    """Feature provider that encodes depth maps with the toy encoder.

    Output matches toy_encode(map, seed, dim) exactly; the projection
    matrix and bias are drawn once and reused.
    """

    needs_maps = True

    def __init__(self, seed: int, dim: int):
        if dim < 1:
            raise DomainError(f"dim must be >= 1, got {dim}")
        self.seed = int(seed)
        self.dim = int(dim)
        rng = np.random.default_rng(seed)
        self._w = rng.standard_normal((dim, _POOLED_LEN)) / 32.0
        self._b = rng.standard_normal(dim) / 32.0

    def get(self, sample_id: str, view_name: str, depth_map: DepthMap | np.ndarray) -> np.ndarray:
        if depth_map is None:
            raise DomainError(f"{sample_id}/{view_name}: toy provider needs a depth map")
        x = _pool_map(depth_map)
        return np.maximum(self._w @ x + self._b, 0.0)


class PrecomputedProvider:
    """Feature provider backed by an embedding store keyed "<id>/<view>"."""

    needs_maps = False

    def __init__(self, store: EmbeddingStore):
        self.store = store
        self.dim = store.dim

    def get(self, sample_id: str, view_name: str,
            depth_map: DepthMap | np.ndarray | None = None) -> np.ndarray:
        key = f"{sample_id}/{view_name}"
        if key not in self.store:
            raise FeatureLookupError(f"no precomputed feature for key {key!r}")
        return self.store.get(key).astype(np.float64)


def get_feature(provider, sample_id: str, view_name: str,
                depth_map: DepthMap | np.ndarray | None = None) -> np.ndarray:
    """Fetch one view feature from any provider as float64."""
    return np.asarray(provider.get(sample_id, view_name, depth_map), dtype=np.float64)


def l2_normalize(vector: np.ndarray) -> np.ndarray:
    """Scale a vector to unit Euclidean norm; the zero vector stays zero."""
    v = np.asarray(vector, dtype=np.float64)
    n = float(np.linalg.norm(v))
    if n == 0.0:
        return v.copy()
    return v / n


def l2_normalize_rows(matrix: np.ndarray) -> np.ndarray:
    """Row-wise l2_normalize; zero rows stay zero."""
    m = np.asarray(matrix, dtype=np.float64)
    norms = np.linalg.norm(m, axis=1, keepdims=True)
    return m / np.where(norms > 0.0, norms, 1.0)
