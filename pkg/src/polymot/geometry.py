"""Polygon primitives: centroid, area, rasterization, IoU, mask-to-polygon.

Conventions used throughout the package:
  - image pixel (i, j) covers the unit square [i, i+1) x [j, j+1) and is
    sampled at its center (i + 0.5, j + 0.5);
  - binary masks are boolean numpy arrays of shape (height, width), indexed
    mask[y, x];
  - polygons are ordered vertex rings, implicitly closed, with a fixed
    vertex count per run (32 by default).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import InvalidInputError

DEFAULT_VERTEX_COUNT = 32


class Point2(NamedTuple):
    x: float
    y: float


@dataclass(frozen=True)
class Polygon:
    """Ordered ring of 2-D vertices; the ring closes last-to-first.

    Self-intersection is permitted: ray-cast polygonization of concave masks
    can produce near-degenerate edges.  The shoelace area is precomputed so
    association gates come for free during tracking.
    """

    vertices: np.ndarray  # (n, 2) float64
    area: float = field(init=False, compare=False)

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=np.float64)
        if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 1:
            raise InvalidInputError(f"polygon vertices must be (n, 2), got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise InvalidInputError("polygon vertices must be finite")
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "area", float(polygon_areas(v[None])[0]))

    def __len__(self) -> int:
        return self.vertices.shape[0]

    def bbox(self) -> tuple[float, float, float, float]:
        """Tight axis-aligned bounds (x_min, y_min, x_max, y_max)."""
        mn = self.vertices.min(axis=0)
        mx = self.vertices.max(axis=0)
        return float(mn[0]), float(mn[1]), float(mx[0]), float(mx[1])

    def translated(self, dx: float, dy: float) -> "Polygon":
        return Polygon(self.vertices + np.array([dx, dy]))


def centroid(p: Polygon) -> Point2:
    """Arithmetic mean of the vertex coordinates (the object's reference center)."""
    if len(p) == 0:
        raise InvalidInputError("centroid of an empty polygon")
    m = p.vertices.mean(axis=0)
    return Point2(float(m[0]), float(m[1]))


def area(p: Polygon) -> float:
    """Absolute shoelace area of the ring."""
    return p.area


def polygon_areas(rings: np.ndarray) -> np.ndarray:
    """Shoelace areas for a batch of rings, shape (m, n, 2) -> (m,)."""
    x, y = rings[..., 0], rings[..., 1]
    xn, yn = np.roll(x, -1, axis=-1), np.roll(y, -1, axis=-1)
    return np.abs(np.sum(x * yn - xn * y, axis=-1)) / 2.0


def rasterize(p: Polygon, width: int, height: int) -> np.ndarray:
    """Scanline fill with the even-odd rule, sampled at pixel centers.

    A pixel (i, j) is set iff the number of edge crossings strictly to the
    right of its center (i + 0.5, j + 0.5) along the +x ray is odd.  Pixels
    outside [0, width) x [0, height) are clipped.
    """
    if width < 1 or height < 1:
        raise InvalidInputError("rasterize target must be at least 1x1")
    mask = np.zeros((height, width), dtype=bool)
    v = p.vertices
    if len(p) < 3:
        return mask
    x1, y1 = v[:, 0], v[:, 1]
    x2, y2 = np.roll(x1, -1), np.roll(y1, -1)

    y_lo = max(0, int(math.floor(min(y1.min(), y2.min()) - 0.5)))
    y_hi = min(height, int(math.ceil(max(y1.max(), y2.max()) + 0.5)))
    for j in range(y_lo, y_hi):
        py = j + 0.5
        crossing = (y1 > py) != (y2 > py)
        if not crossing.any():
            continue
        t = (py - y1[crossing]) / (y2[crossing] - y1[crossing])
        xs = np.sort(x1[crossing] + t * (x2[crossing] - x1[crossing]))
        for k in range(0, len(xs) - 1, 2):
            # centers with xs[k] <= i + 0.5 < xs[k + 1]
            i_lo = max(0, int(math.ceil(xs[k] - 0.5)))
            i_hi = min(width, int(math.ceil(xs[k + 1] - 0.5)))
            if i_hi > i_lo:
                mask[j, i_lo:i_hi] = True
    return mask


def mask_iou(a: np.ndarray, b: np.ndarray) -> float:
    """Intersection over union of two equal-shaped masks; 0 when both empty."""
    if a.shape != b.shape:
        raise InvalidInputError(f"mask shape mismatch: {a.shape} vs {b.shape}")
    union = np.count_nonzero(a | b)
    if union == 0:
        return 0.0
    return np.count_nonzero(a & b) / union


RAY_STEP = 0.5


def polygonize(mask: np.ndarray, n_vertices: int = DEFAULT_VERTEX_COUNT) -> Polygon:
    """Approximate a mask by an n-vertex ring of first ray/mask intersections.

    Ray origins are spaced at equal arc-length intervals along the perimeter
    of the mask's tight bounding box, starting at the top-left corner and
    proceeding clockwise (in image coordinates, y down).  Each ray marches
    from its origin toward the box center in 0.5 px steps and keeps the
    first point whose containing pixel is set; a ray that never hits the
    mask yields the box-center point.
    """
    if n_vertices < 3:
        raise InvalidInputError("polygonize needs at least 3 vertices")
    mask = np.asarray(mask, dtype=bool)
    ys, xs = np.nonzero(mask)
    if len(ys) == 0:
        raise InvalidInputError("polygonize of an empty mask")
    h, w = mask.shape
    # Occupied cells span [x0, x1 + 1) x [y0, y1 + 1) in continuous coords.
    bx0, by0 = float(xs.min()), float(ys.min())
    bx1, by1 = float(xs.max() + 1), float(ys.max() + 1)
    bw, bh = bx1 - bx0, by1 - by0
    center = np.array([bx0 + bw / 2.0, by0 + bh / 2.0])

    perimeter = 2.0 * (bw + bh)
    arc = np.arange(n_vertices) * (perimeter / n_vertices)
    origins = np.empty((n_vertices, 2))
    for k, s in enumerate(arc):
        if s < bw:  # top edge, left to right
            origins[k] = (bx0 + s, by0)
        elif s < bw + bh:  # right edge, downward
            origins[k] = (bx1, by0 + (s - bw))
        elif s < 2 * bw + bh:  # bottom edge, right to left
            origins[k] = (bx1 - (s - bw - bh), by1)
        else:  # left edge, upward
            origins[k] = (bx0, by1 - (s - 2 * bw - bh))

    deltas = center - origins
    lengths = np.hypot(deltas[:, 0], deltas[:, 1])
    n_steps = int(math.ceil(lengths.max() / RAY_STEP)) + 1
    t = np.arange(n_steps) * RAY_STEP
    # Clamp each ray's samples at its own length: past-the-end samples sit
    # exactly on the box center, matching the miss fallback.
    tc = np.minimum(t[None, :], lengths[:, None])
    safe_len = np.where(lengths > 0, lengths, 1.0)
    pts = origins[:, None, :] + (tc / safe_len[:, None])[:, :, None] * deltas[:, None, :]

    ix = np.floor(pts[..., 0]).astype(np.int64)
    iy = np.floor(pts[..., 1]).astype(np.int64)
    inside = (ix >= 0) & (ix < w) & (iy >= 0) & (iy < h)
    hit = np.zeros_like(inside)
    hit[inside] = mask[iy[inside], ix[inside]]

    first = np.argmax(hit, axis=1)
    any_hit = hit.any(axis=1)
    verts = np.where(any_hit[:, None], pts[np.arange(n_vertices), first], center[None, :])
    return Polygon(verts)
