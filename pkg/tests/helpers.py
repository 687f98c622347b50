"""Independent reference implementations used as test oracles.

Everything here is written as plain Python loops over scalars, structured
differently from the library's vectorized code, so agreement between the
two is evidence of correctness rather than shared bugs. The projection
oracle additionally mirrors the library's floating-point evaluation order
(componentwise rotation, ceil on the product, identical clamp sequence) so
the comparison can demand bit equality, not just tolerance.
"""

from __future__ import annotations

import math

import numpy as np

import pointview.adapter as adapter_mod
from pointview.adapter import AdapterParams


def oracle_project_scalar(points, rotation, distance, side, focal):
    """Per-point scalar rasterizer; bit-compatible with project_view.

    Walks points one by one, keeping the minimum depth per pixel. The set
    of (pixel, depth) candidates is identical to a per-pixel scan of all
    points, and float min is order-independent, so this is the same map a
    literal per-pixel search produces (checked by oracle_project_per_pixel
    on small instances, where the quadratic cost is payable).
    """
    r = [[float(rotation[i][j]) for j in range(3)] for i in range(3)]
    d = float(distance)
    s = int(side)
    c = float(focal)
    half = s // 2
    lo = float(-half)
    hi_col = float(s - 1 - half)
    best: dict[tuple[int, int], float] = {}
    for p in points:
        px, py, pz = float(p[0]), float(p[1]), float(p[2])
        qx = r[0][0] * px + r[0][1] * py + r[0][2] * pz
        qy = r[1][0] * px + r[1][1] * py + r[1][2] * pz
        qz = r[2][0] * px + r[2][1] * py + r[2][2] * pz
        depth = qz + d
        if not depth > 0.0:
            continue
        u = qx / depth
        v = qy / depth
        coff = math.ceil(u * c)
        roff = math.ceil(v * c)
        if not (lo <= coff <= hi_col and lo <= roff <= hi_col):
            continue
        key = (half + roff, half + coff)
        if key not in best or depth < best[key]:
            best[key] = depth
    out = np.zeros((s, s), dtype=np.float64)
    for (row, col), depth in best.items():
        val = 1.0 - (depth - (d - 1.0)) / 2.0
        val = max(0.0, val)
        val = min(1.0, val)
        out[row, col] = val
    return out


def oracle_project_per_pixel(points, rotation, distance, side, focal):
    """Literal per-pixel search: for every pixel, scan every point.

    Quadratic in side and point count; used only on small instances to
    anchor oracle_project_scalar.
    """
    r = [[float(rotation[i][j]) for j in range(3)] for i in range(3)]
    d = float(distance)
    s = int(side)
    c = float(focal)
    half = s // 2
    lo = float(-half)
    hi = float(s - 1 - half)
    out = np.zeros((s, s), dtype=np.float64)
    for row in range(s):
        for col in range(s):
            depth_min = None
            for p in points:
                px, py, pz = float(p[0]), float(p[1]), float(p[2])
                qx = r[0][0] * px + r[0][1] * py + r[0][2] * pz
                qy = r[1][0] * px + r[1][1] * py + r[1][2] * pz
                qz = r[2][0] * px + r[2][1] * py + r[2][2] * pz
                depth = qz + d
                if not depth > 0.0:
                    continue
                coff = math.ceil(qx / depth * c)
                roff = math.ceil(qy / depth * c)
                if not (lo <= coff <= hi and lo <= roff <= hi):
                    continue
                if half + roff == row and half + coff == col:
                    if depth_min is None or depth < depth_min:
                        depth_min = depth
            if depth_min is not None:
                val = 1.0 - (depth_min - (d - 1.0)) / 2.0
                val = max(0.0, val)
                val = min(1.0, val)
                out[row, col] = val
    return out


def reference_bilinear(values, target):
    """Four-corner weighted bilinear resample, corner-aligned grid."""
    v = np.asarray(values, dtype=np.float64)
    s = v.shape[0]
    t = int(target)
    out = np.zeros((t, t), dtype=np.float64)
    for i in range(t):
        for j in range(t):
            sy = 0.0 if t == 1 else i * (s - 1) / (t - 1)
            sx = 0.0 if t == 1 else j * (s - 1) / (t - 1)
            y0 = math.floor(sy)
            x0 = math.floor(sx)
            y1 = min(y0 + 1, s - 1)
            x1 = min(x0 + 1, s - 1)
            fy = sy - y0
            fx = sx - x0
            out[i, j] = (v[y0, x0] * (1.0 - fy) * (1.0 - fx)
                         + v[y0, x1] * (1.0 - fy) * fx
                         + v[y1, x0] * fy * (1.0 - fx)
                         + v[y1, x1] * fy * fx)
    return out


def loop_view_logits(feature, classifier, scale, normalize=True):
    """Scalar-loop version of view_logits."""
    f = [float(x) for x in feature]
    c = len(f)
    k = len(classifier)
    if normalize:
        norm = math.sqrt(sum(x * x for x in f))
        if norm > 0.0:
            f = [x / norm for x in f]
    logits = []
    for row in classifier:
        w = [float(x) for x in row]
        if normalize:
            norm = math.sqrt(sum(x * x for x in w))
            if norm > 0.0:
                w = [x / norm for x in w]
        logits.append(scale * sum(f[i] * w[i] for i in range(c)))
    return np.array(logits, dtype=np.float64)


def loop_aggregate(per_view_logits, alpha):
    """Scalar-loop version of aggregate."""
    m = len(per_view_logits)
    k = len(per_view_logits[0])
    out = [0.0] * k
    for i in range(m):
        for j in range(k):
            out[j] += float(alpha[i]) * float(per_view_logits[i][j])
    return np.array(out, dtype=np.float64)


def longdouble_softmax(logits):
    """Softmax in extended precision for comparison."""
    z = np.asarray(logits, dtype=np.longdouble)
    z = z - z.max()
    e = np.exp(z)
    return (e / e.sum()).astype(np.float64)


def fd_gradients(params: AdapterParams, feats, label, classifier, scale, eps,
                 step=1e-5, normalize=True):
    """Central finite differences of the training loss for every tensor."""

    def loss_at() -> float:
        value, _ = adapter_mod.loss_and_grads(
            params, feats, label, classifier, scale=scale, eps=eps,
            normalize=normalize)
        return value

    out = {}
    for name in adapter_mod._TENSOR_FIELDS:
        tensor = getattr(params, name)
        fd = np.zeros_like(tensor)
        it = np.nditer(tensor, flags=["multi_index"])
        for _ in it:
            ix = it.multi_index
            orig = tensor[ix]
            tensor[ix] = orig + step
            plus = loss_at()
            tensor[ix] = orig - step
            minus = loss_at()
            tensor[ix] = orig
            fd[ix] = (plus - minus) / (2.0 * step)
        out[name] = fd
    return out


def max_relative_error(fd, analytic, tiny=1e-12) -> float:
    """Worst-case |fd - analytic| scaled by the larger magnitude present."""
    fd = np.asarray(fd, dtype=np.float64)
    an = np.asarray(analytic, dtype=np.float64)
    denom = max(np.abs(fd).max(initial=0.0), np.abs(an).max(initial=0.0), tiny)
    return float(np.abs(fd - an).max(initial=0.0) / denom)
