"""Inter-view adapter: a small trainable head over frozen per-view features.

The adapter compresses the concatenated view features into a global vector,
re-expands one correction per view, and blends each correction back into
its view feature with a fixed residual ratio beta. Training touches only
the adapter tensors and the per-view aggregation weights; features and the
classifier stay frozen. Gradients are derived by hand (no autograd) and are
checked against central finite differences in the test suite.

Shapes, with M views, feature width C, and hidden width h:

    w1 (h, M*C)   b1 (h,)      compress   g = relu(x w1^T + b1)
    w2 (C, h)     b2 (C,)      global     f_g = g w2^T + b2
    w3 (M*C, C)   b3 (M*C,)    expand     a_i = relu(f_g w3_i^T + b3_i)
    alpha (M,)                 aggregation weights (trainable)
    beta scalar in [0, 1]      blend      f'_i = (1-beta) f_i + beta a_i

where w3_i is the i-th (C, C) row block of w3. The per-sample loss is
label-smoothed cross-entropy on the softmax of the aggregated logits, with
per-view logits computed exactly as in the zero-shot path (L2-normalized
blended features against L2-normalized classifier rows, times a scale).
"""

from __future__ import annotations

import csv
import math
import struct
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cloud import DatasetManifest, augment as augment_cloud, load_cloud, normalize_unit_cube
from .errors import DomainError, FormatError
from .features import get_feature, l2_normalize_rows
from .projection import ProjectionSettings, ViewFrame, _project_all_lenient, project_all
from .zeroshot import DEFAULT_LOGIT_SCALE, EvalResult, evaluate

CHECKPOINT_MAGIC = b"PCAD"
CHECKPOINT_VERSION = 1
DEFAULT_BETA = 0.6
# Training temperature. Deliberately far below the evaluation logit scale:
# argmax accuracy does not depend on it, training stability does (see train).
DEFAULT_TRAIN_SCALE = 1.0
_LOG_FLOOR = 1e-12

_TENSOR_FIELDS = ("w1", "b1", "w2", "b2", "w3", "b3", "alpha")


@dataclass
class AdapterParams:
    """All trainable tensors plus the fixed blend ratio beta."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    w3: np.ndarray
    b3: np.ndarray
    alpha: np.ndarray
    beta: float

    def __post_init__(self) -> None:
        for name in _TENSOR_FIELDS:
            setattr(self, name, np.asarray(getattr(self, name), dtype=np.float64))
        m, c, h = self.n_views, self.dim, self.hidden
        expected = {"w1": (h, m * c), "b1": (h,), "w2": (c, h), "b2": (c,),
                    "w3": (m * c, c), "b3": (m * c,), "alpha": (m,)}
        for name, shape in expected.items():
            got = getattr(self, name).shape
            if got != shape:
                raise DomainError(f"{name} must have shape {shape}, got {got}")
        if not 0.0 <= self.beta <= 1.0:
            raise DomainError(f"beta must lie in [0, 1], got {self.beta}")

    @property
    def n_views(self) -> int:
        return int(self.alpha.shape[0])

    @property
    def dim(self) -> int:
        return int(self.b2.shape[0])

    @property
    def hidden(self) -> int:
        return int(self.b1.shape[0])

    def copy(self) -> "AdapterParams":
        return AdapterParams(*(getattr(self, n).copy() for n in _TENSOR_FIELDS), self.beta)


@dataclass
class AdapterGrads:
    """Gradients for every trainable tensor, mirroring AdapterParams."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    w3: np.ndarray
    b3: np.ndarray
    alpha: np.ndarray


def default_hidden(dim: int) -> int:
    """Bottleneck width used when none is given: max(dim // 4, 1)."""
    return max(dim // 4, 1)


def adapter_init(n_views: int, dim: int, hidden: int, seed: int,
                 beta: float = DEFAULT_BETA) -> AdapterParams:
    """Seeded initial parameters.

    w1 and w2 draw from uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)); w3 and
    every bias start at zero so the first forward pass blends each feature
    with a zero correction; alpha starts at all ones.
    """
    if n_views < 1 or dim < 1 or hidden < 1:
        raise DomainError(f"n_views, dim, hidden must be >= 1, got {(n_views, dim, hidden)}")
    rng = np.random.default_rng(seed)
    bound1 = 1.0 / math.sqrt(n_views * dim)
    bound2 = 1.0 / math.sqrt(hidden)
    return AdapterParams(
        w1=rng.uniform(-bound1, bound1, size=(hidden, n_views * dim)),
        b1=np.zeros(hidden),
        w2=rng.uniform(-bound2, bound2, size=(dim, hidden)),
        b2=np.zeros(dim),
        w3=np.zeros((n_views * dim, dim)),
        b3=np.zeros(n_views * dim),
        alpha=np.ones(n_views),
        beta=beta,
    )


def _forward_batch(params: AdapterParams, x: np.ndarray):
    """Shared forward over flattened feature rows x of shape (B, M*C)."""
    gpre = x @ params.w1.T + params.b1
    grelu = np.maximum(gpre, 0.0)
    fglobal = grelu @ params.w2.T + params.b2
    apre = fglobal @ params.w3.T + params.b3
    act = np.maximum(apre, 0.0)
    blended = (1.0 - params.beta) * x + params.beta * act
    return gpre, grelu, fglobal, apre, blended


def adapter_forward(params: AdapterParams, features: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Blend one sample's (M, C) feature block; returns (blended, global).

    With zero w3 and biases the blended output is exactly (1-beta) * features.
    """
    f = np.asarray(features, dtype=np.float64)
    m, c = params.n_views, params.dim
    if f.shape != (m, c):
        raise DomainError(f"features must have shape {(m, c)}, got {f.shape}")
    _, _, fglobal, _, blended = _forward_batch(params, f.reshape(1, m * c))
    return blended.reshape(m, c), fglobal[0]


def smoothed_ce(probs: np.ndarray, label: int, eps: float) -> float:
    """Label-smoothed cross-entropy on a probability vector.

    The true class carries weight 1 - eps + eps/K and every class adds
    eps/K; logs are floored at 1e-12 so the value stays finite.
    """
    p = np.asarray(probs, dtype=np.float64)
    k = p.shape[0]
    if not 0 <= label < k:
        raise DomainError(f"label {label} outside [0, {k})")
    if not 0.0 <= eps < 1.0:
        raise DomainError(f"eps must lie in [0, 1), got {eps}")
    t = np.full(k, eps / k)
    t[label] = 1.0 - eps + eps / k
    return float(-(t * np.log(np.maximum(p, _LOG_FLOOR))).sum())


def _batch_loss_and_grads(params: AdapterParams, feats: np.ndarray, labels: np.ndarray,
                          wn: np.ndarray, scale: float, eps: float, normalize: bool):
    """Mean loss, mean gradients, and correct count over a feature batch.

    feats is (B, M, C); wn is the classifier with rows already normalized
    when normalize is True. The backward pass follows the chain
    smoothed_ce . softmax . aggregate . scaled-similarity . l2-normalize .
    blend . expand . relu . compress, treating the log floor as inactive.
    """
    b = feats.shape[0]
    m, c = params.n_views, params.dim
    k = wn.shape[0]
    x = feats.reshape(b, m * c)
    gpre, grelu, fglobal, apre, blended = _forward_batch(params, x)
    fa = blended.reshape(b, m, c)

    if normalize:
        norms = np.linalg.norm(fa, axis=2)
        safe = np.where(norms > 0.0, norms, 1.0)
        u = fa / safe[:, :, None]
    else:
        u = fa
    per_view = scale * (u @ wn.T)                      # (B, M, K)
    logits = np.einsum("m,bmk->bk", params.alpha, per_view)

    zmax = logits.max(axis=1, keepdims=True)
    ez = np.exp(logits - zmax)
    probs = ez / ez.sum(axis=1, keepdims=True)
    targets = np.full((b, k), eps / k)
    targets[np.arange(b), labels] = 1.0 - eps + eps / k
    losses = -(targets * np.log(np.maximum(probs, _LOG_FLOOR))).sum(axis=1)
    mean_loss = float(losses.mean())
    ncorrect = int((logits.argmax(axis=1) == labels).sum())

    dlogits = (probs - targets) / b                    # grad of the batch mean
    dalpha = np.einsum("bk,bmk->m", dlogits, per_view)
    dper_view = params.alpha[None, :, None] * dlogits[:, None, :]
    du = scale * (dper_view @ wn)                      # (B, M, C)
    if normalize:
        inner = (du * u).sum(axis=2, keepdims=True)
        dfa = np.where(norms[:, :, None] > 0.0,
                       (du - inner * u) / safe[:, :, None], 0.0)
    else:
        dfa = du
    dblended = dfa.reshape(b, m * c)
    # ReLU backward takes slope 1 at exactly 0: the expansion layer starts at
    # zero pre-activations, and a 0-at-0 convention would freeze it there.
    dapre = np.where(apre >= 0.0, params.beta * dblended, 0.0)
    dw3 = dapre.T @ fglobal
    db3 = dapre.sum(axis=0)
    dfglobal = dapre @ params.w3
    dw2 = dfglobal.T @ grelu
    db2 = dfglobal.sum(axis=0)
    dgpre = np.where(gpre >= 0.0, dfglobal @ params.w2, 0.0)
    dw1 = dgpre.T @ x
    db1 = dgpre.sum(axis=0)

    grads = AdapterGrads(dw1, db1, dw2, db2, dw3, db3, dalpha)
    return mean_loss, grads, ncorrect


def loss_and_grads(params: AdapterParams, features: np.ndarray, label: int,
                   classifier: np.ndarray, *, scale: float = DEFAULT_TRAIN_SCALE,
                   eps: float = 0.1, normalize: bool = True) -> tuple[float, AdapterGrads]:
    """Single-sample loss and exact analytic gradients.

    features is (M, C); the classifier is (K, C) and stays frozen. This is
    the function finite-difference checks drive.
    """
    f = np.asarray(features, dtype=np.float64)
    m, c = params.n_views, params.dim
    if f.shape != (m, c):
        raise DomainError(f"features must have shape {(m, c)}, got {f.shape}")
    w = np.asarray(classifier, dtype=np.float64)
    if w.ndim != 2 or w.shape[1] != c:
        raise DomainError(f"classifier width must be {c}, got shape {w.shape}")
    if not 0 <= label < w.shape[0]:
        raise DomainError(f"label {label} outside [0, {w.shape[0]})")
    wn = l2_normalize_rows(w) if normalize else w
    loss, grads, _ = _batch_loss_and_grads(params, f[None], np.array([label]),
                                           wn, float(scale), float(eps), normalize)
    return loss, grads


def cosine_lr(epoch: int, total_epochs: int, lr0: float) -> float:
    """Half-cosine decay from lr0 at epoch 0 to 0 at epoch == total_epochs."""
    if total_epochs <= 0:
        return lr0
    return lr0 * 0.5 * (1.0 + math.cos(math.pi * epoch / total_epochs))


@dataclass(frozen=True)
class TrainConfig:
    """Few-shot training hyperparameters."""

    shots: int = 16
    epochs: int = 250
    batch_size: int = 32
    lr0: float = 0.01
    momentum: float = 0.9
    smooth_eps: float = 0.1
    seed: int = 0

    def __post_init__(self) -> None:
        if self.shots < 1:
            raise DomainError(f"shots must be >= 1, got {self.shots}")
        if self.epochs < 0:
            raise DomainError(f"epochs must be >= 0, got {self.epochs}")
        if self.batch_size < 1:
            raise DomainError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.lr0 < 0.0:
            raise DomainError(f"lr0 must be >= 0, got {self.lr0}")
        if not 0.0 <= self.momentum < 1.0:
            raise DomainError(f"momentum must lie in [0, 1), got {self.momentum}")
        if not 0.0 <= self.smooth_eps < 1.0:
            raise DomainError(f"smooth_eps must lie in [0, 1), got {self.smooth_eps}")


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    lr: float
    mean_loss: float
    train_acc: float


def write_trace_csv(trace: list[EpochStats], path) -> None:
    """Write the per-epoch loss trace as epoch,lr,mean_loss,train_acc."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "lr", "mean_loss", "train_acc"])
        for row in trace:
            writer.writerow([row.epoch, f"{row.lr:.9g}", f"{row.mean_loss:.9g}",
                             f"{row.train_acc:.9g}"])


def train(manifest: DatasetManifest, provider, classifier: np.ndarray,
          views: list[ViewFrame], settings: ProjectionSettings, config: TrainConfig, *,
          augment: str | None = None, beta: float = DEFAULT_BETA,
          hidden: int | None = None, alpha_init: np.ndarray | None = None,
          scale: float = DEFAULT_TRAIN_SCALE, normalize: bool = True,
          cloud_format: str = "auto") -> tuple[AdapterParams, list[EpochStats]]:
    """Fit the adapter on an (already sampled) few-shot manifest.

    SGD with momentum (v <- momentum*v - lr*g; theta <- theta + v) on
    batch-mean gradients, with a cosine learning-rate schedule and a seeded
    shuffle each epoch. Features are projected and encoded once and cached
    across epochs unless an augmentation recipe is set, in which case every
    epoch re-augments, re-projects, and re-encodes each cloud. Providers
    without live encoding (precomputed stores) cannot support augmentation;
    it is disabled with a warning. Deterministic in (inputs, config).

    scale is the training temperature on normalized similarities. Accuracy
    at evaluation time is invariant to it, but the loss landscape is not:
    large values saturate the softmax, and the cheapest descent direction
    is then to shrink every view weight toward zero before the expansion
    layers can learn anything. The default keeps similarities in the
    smoothed-CE sweet spot; raise it only for encoders whose class scores
    are already well separated at initialization.
    """
    if not manifest.entries:
        raise DomainError("cannot train on an empty manifest")
    w = np.asarray(classifier, dtype=np.float64)
    k = len(manifest.class_names)
    if w.ndim != 2 or w.shape[0] != k:
        raise DomainError(f"classifier must have {k} rows, got shape {w.shape}")
    c = int(w.shape[1])
    m = len(views)
    if m < 1:
        raise DomainError("at least one view is required")
    if augment is not None and not provider.needs_maps:
        warnings.warn("augmentation needs a live encoder; precomputed features "
                      "are fixed, so augmentation is disabled", stacklevel=2)
        augment = None

    n = len(manifest.entries)
    labels = manifest.labels()
    clouds = None
    if provider.needs_maps:
        clouds = [normalize_unit_cube(load_cloud(e.path, cloud_format, id=e.id))
                  for e in manifest.entries]

    def extract(cloud_list, lenient=False) -> np.ndarray:
        # augmented clouds may leave the unit cube (scale up to 1.25 plus
        # shifts), so the per-epoch path skips the projector's cube gate
        project = _project_all_lenient if lenient else project_all
        feats = np.empty((n, m, c))
        for i, entry in enumerate(manifest.entries):
            maps = project(cloud_list[i], views, settings) if cloud_list else [None] * m
            for j, view in enumerate(views):
                row = get_feature(provider, entry.id, view.name, maps[j] if maps else None)
                if row.shape != (c,):
                    raise DomainError(f"sample {entry.id!r}: feature width {row.shape} "
                                      f"does not match classifier width {c}")
                feats[i, j] = row
        return feats

    base_feats = extract(clouds) if augment is None else None

    h = default_hidden(c) if hidden is None else int(hidden)
    params = adapter_init(m, c, h, config.seed, beta=beta)
    if alpha_init is not None:
        a0 = np.asarray(alpha_init, dtype=np.float64)
        if a0.shape != (m,):
            raise DomainError(f"alpha_init must have shape ({m},), got {a0.shape}")
        params.alpha = a0.copy()

    wn = l2_normalize_rows(w) if normalize else w
    velocity = {name: np.zeros_like(getattr(params, name)) for name in _TENSOR_FIELDS}
    rng = np.random.default_rng(config.seed)
    trace: list[EpochStats] = []

    for epoch in range(config.epochs):
        lr = cosine_lr(epoch, config.epochs, config.lr0)
        if augment is None:
            feats = base_feats
        else:
            feats = extract([augment_cloud(cl, augment, rng) for cl in clouds],
                            lenient=True)
        order = rng.permutation(n)
        total_loss = 0.0
        correct = 0
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            loss, grads, ncorr = _batch_loss_and_grads(
                params, feats[idx], labels[idx], wn, float(scale),
                float(config.smooth_eps), normalize)
            total_loss += loss * idx.size
            correct += ncorr
            for name in _TENSOR_FIELDS:
                v = velocity[name]
                v *= config.momentum
                v -= lr * getattr(grads, name)
                getattr(params, name)[...] += v
        trace.append(EpochStats(epoch, lr, total_loss / n, correct / n))
    return params, trace


def checkpoint_save(params: AdapterParams, path) -> None:
    """Serialize adapter parameters.

    Layout: magic "PCAD", version u8 = 1, u32 LE dims (M, C, h), then
    float32 LE tensors w1, b1, w2, b2, w3, b3, alpha, and finally beta as
    one float32. Values are quantized to float32 on save.
    """
    parts = [CHECKPOINT_MAGIC, struct.pack("<B", CHECKPOINT_VERSION),
             struct.pack("<III", params.n_views, params.dim, params.hidden)]
    for name in _TENSOR_FIELDS:
        parts.append(np.ascontiguousarray(getattr(params, name), dtype="<f4").tobytes())
    parts.append(struct.pack("<f", params.beta))
    Path(path).write_bytes(b"".join(parts))


def checkpoint_load(path) -> AdapterParams:
    """Read a checkpoint written by checkpoint_save.

    Values come back as float64 copies of the stored float32 tensors, so
    save(load(p)) reproduces the file bytes exactly.
    """
    data = Path(path).read_bytes()
    if len(data) < 17:
        raise FormatError(f"{path}: truncated checkpoint header")
    if data[:4] != CHECKPOINT_MAGIC:
        raise FormatError(f"{path}: bad magic, not an adapter checkpoint")
    version = data[4]
    if version != CHECKPOINT_VERSION:
        raise FormatError(f"{path}: unsupported checkpoint version {version}")
    m, c, h = struct.unpack("<III", data[5:17])
    if m < 1 or c < 1 or h < 1:
        raise FormatError(f"{path}: bad dimensions {(m, c, h)}")
    counts = {"w1": h * m * c, "b1": h, "w2": c * h, "b2": c,
              "w3": m * c * c, "b3": m * c, "alpha": m}
    expected = 17 + 4 * (sum(counts.values()) + 1)
    if len(data) != expected:
        raise FormatError(f"{path}: expected {expected} bytes for dims {(m, c, h)}, "
                          f"got {len(data)}")
    pos = 17
    tensors = {}
    shapes = {"w1": (h, m * c), "b1": (h,), "w2": (c, h), "b2": (c,),
              "w3": (m * c, c), "b3": (m * c,), "alpha": (m,)}
    for name in _TENSOR_FIELDS:
        count = counts[name]
        arr = np.frombuffer(data[pos:pos + 4 * count], dtype="<f4")
        tensors[name] = arr.astype(np.float64).reshape(shapes[name])
        pos += 4 * count
    (beta,) = struct.unpack("<f", data[pos:pos + 4])
    return AdapterParams(**tensors, beta=float(beta))


def evaluate_with_adapter(manifest: DatasetManifest, provider, classifier: np.ndarray,
                          views: list[ViewFrame], settings: ProjectionSettings,
                          params: AdapterParams, **kwargs) -> EvalResult:
    """Evaluate with adapter blending applied before aggregation.

    The checkpoint's learned alpha supplies the view weights. Extra keyword
    arguments pass straight through to evaluate.
    """
    if params.n_views != len(views):
        raise DomainError(f"checkpoint holds {params.n_views} views, got {len(views)}")

    def transform(feats: np.ndarray) -> np.ndarray:
        return adapter_forward(params, feats)[0]

    return evaluate(manifest, provider, classifier, views, settings,
                    weights=params.alpha, feature_transform=transform, **kwargs)
