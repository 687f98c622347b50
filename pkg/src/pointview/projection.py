"""Perspective projection of normalized clouds onto square depth maps.

A view frame rotates world coordinates so the view axis becomes +z, a
pinhole model maps each point to a pixel, and the nearest point wins each
pixel. Values encode nearness in [0, 1]; pixels no point reaches stay 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .cloud import PointCloud
from .errors import DomainError, FormatError

VIEW_SET_NAMES = ("zs6", "zs12", "fs10")

# Axis-aligned frames. Rows are the view-frame basis expressed in world
# coordinates; the third row is the direction the camera looks along.
_FRONT = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
_BACK = np.array([[-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, -1.0]])
_RIGHT = np.array([[0.0, 0.0, 1.0], [0.0, 1.0, 0.0], [-1.0, 0.0, 0.0]])
_LEFT = np.array([[0.0, 0.0, -1.0], [0.0, 1.0, 0.0], [1.0, 0.0, 0.0]])
_TOP = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, -1.0, 0.0]])
_BOTTOM = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]])

_QUARTER_TURN = math.pi / 4.0


@dataclass(frozen=True)
class ViewFrame:
    """A named world-to-view rotation; the view axis maps to +z."""

    name: str
    rotation: np.ndarray

    def __post_init__(self) -> None:
        r = np.asarray(self.rotation, dtype=np.float64)
        if r.shape != (3, 3):
            raise DomainError(f"rotation must be 3x3, got {r.shape}")
        if not np.allclose(r @ r.T, np.eye(3), atol=1e-9):
            raise DomainError(f"view {self.name!r}: rotation is not orthonormal")
        if not math.isclose(float(np.linalg.det(r)), 1.0, abs_tol=1e-9):
            raise DomainError(f"view {self.name!r}: rotation determinant is not +1")
        object.__setattr__(self, "rotation", r)


def _rot_x(angle: float) -> np.ndarray:
    # positive angle pitches the view axis downward (camera moves above)
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, s], [0.0, -s, c]])


def _rot_y(angle: float) -> np.ndarray:
    # positive angle yaws the view axis toward -x (camera moves to the right)
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def _corner(vertical: str, horizontal: str, depthwise: str) -> np.ndarray:
    base = _FRONT if depthwise == "front" else _BACK
    yaw = _rot_y(_QUARTER_TURN if horizontal == "right" else -_QUARTER_TURN)
    pitch = _rot_x(_QUARTER_TURN if vertical == "upper" else -_QUARTER_TURN)
    return pitch @ yaw @ base


def _twelve_views() -> list[ViewFrame]:
    frames = [
        ViewFrame("front", _FRONT),
        ViewFrame("right", _RIGHT),
        ViewFrame("back", _BACK),
        ViewFrame("left", _LEFT),
        ViewFrame("top", _TOP),
        ViewFrame("bottom", _BOTTOM),
        ViewFrame("upper_right_front", _corner("upper", "right", "front")),
        ViewFrame("upper_right_back", _corner("upper", "right", "back")),
        ViewFrame("lower_right_front", _corner("lower", "right", "front")),
        ViewFrame("lower_right_back", _corner("lower", "right", "back")),
        ViewFrame("upper_left_front", _corner("upper", "left", "front")),
        ViewFrame("upper_left_back", _corner("upper", "left", "back")),
    ]
    return frames


def view_set(variant: str) -> list[ViewFrame]:
    """Return a named list of view frames.

    zs6: the six axis-aligned views (front, right, back, left, top, bottom).
    zs12: zs6 plus six corner views tilted 45 degrees off front or back.
    fs10: the first ten zs12 views with the left view re-aimed to the right
          (kept as a separate slot named "left_mirrored").
    """
    twelve = _twelve_views()
    if variant == "zs6":
        return twelve[:6]
    if variant == "zs12":
        return twelve
    if variant == "fs10":
        ten = twelve[:10]
        ten[3] = ViewFrame("left_mirrored", _RIGHT)
        return ten
    raise DomainError(f"unknown view set {variant!r}, expected one of {VIEW_SET_NAMES}")


@dataclass(frozen=True)
class ProjectionSettings:
    """Pinhole and raster geometry.

    distance: view-axis offset added to rotated z; must exceed 1 so every
        axis-aligned view keeps normalized points in front of the camera.
    side: raster side length in pixels.
    focal: pixel scale applied to the perspective ratio.
    target: side length maps are resized to for encoder input.
    """

    distance: float
    side: int
    focal: float = 110.0
    target: int = 224

    def __post_init__(self) -> None:
        if not self.distance > 1.0:
            raise DomainError(f"distance must be > 1, got {self.distance}")
        if self.side < 1:
            raise DomainError(f"side must be >= 1, got {self.side}")
        if not self.focal > 0.0:
            raise DomainError(f"focal must be > 0, got {self.focal}")
        if self.target < 1:
            raise DomainError(f"target must be >= 1, got {self.target}")


PROJECTION_PRESETS = {
    "mn10": ProjectionSettings(distance=1.7, side=100),
    "mn40": ProjectionSettings(distance=1.6, side=121),
    "sonn": ProjectionSettings(distance=1.8, side=196),
}


@dataclass
class DepthMap:
    """A square nearness raster for one view; values lie in [0, 1]."""

    values: np.ndarray
    view: str

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise DomainError(f"depth map must be square, got {v.shape}")
        self.values = v

    @property
    def side(self) -> int:
        return int(self.values.shape[0])


def project_view(cloud: PointCloud, view: ViewFrame, settings: ProjectionSettings) -> DepthMap:
    """Rasterize one view of a normalized cloud.

    For a point p: q = R p, depth = q_z + distance, and the pixel is
    (side//2 + ceil(q_y/depth * focal), side//2 + ceil(q_x/depth * focal))
    as (row, col). Points behind the camera (depth <= 0, reachable only in
    corner views) and points whose pixel falls outside the raster are
    dropped. The smallest depth wins each pixel and is stored as
    1 - (depth - (distance-1))/2, clamped to [0, 1].

    Raises DomainError when any input coordinate exceeds 1 + 1e-9 in
    magnitude; callers normalize first.
    """
    pts = cloud.points
    if np.any(np.abs(pts) > 1.0 + 1e-9):
        raise DomainError(f"cloud {cloud.id!r} is not normalized to the unit cube")
    return DepthMap(_rasterize(pts, view.rotation, settings), view.name)


def _rasterize(pts: np.ndarray, rotation: np.ndarray,
               settings: ProjectionSettings) -> np.ndarray:
    """project_view's math without the unit-cube gate.

    Total for any finite coordinates: behind-camera and out-of-frame points
    are culled and stored values clamp to [0, 1]. Training-time augmentation
    pushes normalized clouds slightly outside the cube and projects through
    here; the public entry points keep the gate.
    """
    r = rotation
    d = float(settings.distance)
    s = int(settings.side)
    c = float(settings.focal)
    half = s // 2

    x, y, z = pts[:, 0], pts[:, 1], pts[:, 2]
    # componentwise so the arithmetic matches a scalar re-implementation bit
    # for bit (no BLAS reassociation)
    qx = r[0, 0] * x + r[0, 1] * y + r[0, 2] * z
    qy = r[1, 0] * x + r[1, 1] * y + r[1, 2] * z
    qz = r[2, 0] * x + r[2, 1] * y + r[2, 2] * z
    depth = qz + d

    visible = depth > 0.0
    buf = np.full(s * s, np.inf)
    if np.any(visible):
        dv = depth[visible]
        u = qx[visible] / dv
        v = qy[visible] / dv
        coff = np.ceil(u * c)
        roff = np.ceil(v * c)
        inside = (coff >= -half) & (coff <= s - 1 - half) \
            & (roff >= -half) & (roff <= s - 1 - half)
        cols = half + coff[inside].astype(np.int64)
        rows = half + roff[inside].astype(np.int64)
        np.minimum.at(buf, rows * s + cols, dv[inside])

    vals = 1.0 - (buf - (d - 1.0)) / 2.0
    vals = np.minimum(1.0, np.maximum(0.0, vals))
    return np.where(np.isfinite(buf), vals, 0.0).reshape(s, s)


def _project_all_lenient(cloud: PointCloud, views: list[ViewFrame],
                         settings: ProjectionSettings) -> list[DepthMap]:
    """project_all for augmented clouds that may poke outside the cube."""
    return [resize_bilinear(DepthMap(_rasterize(cloud.points, v.rotation, settings), v.name),
                            settings.target)
            for v in views]


def resize_bilinear(depth_map: DepthMap, target: int) -> DepthMap:
    """Corner-aligned bilinear resample to a target x target raster.

    Sample positions are i*(S-1)/(T-1) (0 when T == 1), so target == side
    returns the input values exactly and constant maps stay constant.
    """
    if target < 1:
        raise DomainError(f"target must be >= 1, got {target}")
    v = depth_map.values
    s = v.shape[0]
    if target > 1:
        src = np.arange(target) * (s - 1) / (target - 1)
    else:
        src = np.zeros(1)
    lo = np.floor(src).astype(np.int64)
    hi = np.minimum(lo + 1, s - 1)
    frac = src - lo

    a = v[np.ix_(lo, lo)]
    b = v[np.ix_(lo, hi)]
    cc = v[np.ix_(hi, lo)]
    dd = v[np.ix_(hi, hi)]
    top = a + frac[None, :] * (b - a)
    bot = cc + frac[None, :] * (dd - cc)
    out = top + frac[:, None] * (bot - top)
    return DepthMap(np.clip(out, 0.0, 1.0), depth_map.view)


def project_all(cloud: PointCloud, views: list[ViewFrame],
                settings: ProjectionSettings) -> list[DepthMap]:
    """Project every view and resize each map to settings.target."""
    return [resize_bilinear(project_view(cloud, v, settings), settings.target) for v in views]


def occupancy(depth_map: DepthMap | np.ndarray) -> float:
    """Fraction of pixels at least one point landed on."""
    v = depth_map.values if isinstance(depth_map, DepthMap) else np.asarray(depth_map)
    return float(np.count_nonzero(v) / v.size)


def write_pgm(depth_map: DepthMap, path: str | Path) -> None:
    """Write a 16-bit binary PGM (P5, maxval 65535, big-endian samples).

    Each pixel is round(65535 * value), so files are bit-stable for equal
    maps and usable as golden fixtures.
    """
    v = depth_map.values
    header = f"P5\n{v.shape[1]} {v.shape[0]}\n65535\n".encode("ascii")
    payload = np.rint(v * 65535.0).astype(">u2").tobytes()
    Path(path).write_bytes(header + payload)


def read_pgm(path: str | Path) -> np.ndarray:
    """Read a binary PGM and return float64 values scaled to [0, 1]."""
    data = Path(path).read_bytes()
    if not data.startswith(b"P5"):
        raise FormatError(f"{path}: not a binary PGM (P5) file")

    tokens: list[int] = []
    pos = 2
    while len(tokens) < 3:
        if pos >= len(data):
            raise FormatError(f"{path}: truncated PGM header")
        ch = data[pos:pos + 1]
        if ch.isspace():
            pos += 1
        elif ch == b"#":
            pos = data.find(b"\n", pos)
            if pos < 0:
                raise FormatError(f"{path}: truncated PGM comment")
        else:
            end = pos
            while end < len(data) and not data[end:end + 1].isspace():
                end += 1
            try:
                tokens.append(int(data[pos:end]))
            except ValueError as exc:
                raise FormatError(f"{path}: bad PGM header token") from exc
            pos = end
    pos += 1  # single whitespace byte after maxval
    width, height, maxval = tokens
    if not 0 < maxval < 65536:
        raise FormatError(f"{path}: unsupported maxval {maxval}")
    dtype = ">u2" if maxval > 255 else "u1"
    count = width * height
    payload = data[pos:]
    expected = count * (2 if maxval > 255 else 1)
    if len(payload) != expected:
        raise FormatError(f"{path}: expected {expected} payload bytes, got {len(payload)}")
    raster = np.frombuffer(payload, dtype=dtype).reshape(height, width)
    return raster.astype(np.float64) / float(maxval)
