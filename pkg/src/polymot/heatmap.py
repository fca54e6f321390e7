"""Center-point heatmaps built from elliptical Gaussians.

Targets for detection training use one channel per class; the prior map
summarizing live tracks from the previous frame is class-agnostic
(single channel).  Heatmap cell (i, j) sits at coordinate (i, j) in
heatmap space, i.e. input pixels divided by the downsample factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .geometry import Point2

DEFAULT_DOWNSAMPLE = 4
SIGMA_FLOOR = 0.5  # cells; keeps tiny objects from degenerating to a spike


@dataclass(frozen=True)
class GaussianSpec:
    """One elliptical splat: center in heatmap coords, per-axis sigmas in cells."""

    center: Point2
    sigma_x: float
    sigma_y: float

    def __post_init__(self):
        if not (self.sigma_x > 0 and self.sigma_y > 0):
            raise InvalidInputError("gaussian sigmas must be positive")


@dataclass
class Heatmap:
    """Dense per-cell scores in [0, 1], shape (channels, height, width)."""

    values: np.ndarray
    downsample: int = DEFAULT_DOWNSAMPLE

    @classmethod
    def zeros(cls, channels: int, width: int, height: int,
              downsample: int = DEFAULT_DOWNSAMPLE) -> "Heatmap":
        """Empty map for an input of size width x height pixels."""
        hw = math.ceil(width / downsample)
        hh = math.ceil(height / downsample)
        return cls(np.zeros((channels, hh, hw)), downsample)

    @property
    def channels(self) -> int:
        return self.values.shape[0]

    @property
    def height(self) -> int:
        return self.values.shape[1]

    @property
    def width(self) -> int:
        return self.values.shape[2]


def object_sigmas(box_w: float, box_h: float,
                  downsample: int = DEFAULT_DOWNSAMPLE) -> tuple[float, float]:
    """Per-axis Gaussian sigmas for an object of the given pixel dimensions.

    sigma = dim / (6 * downsample), floored at half a cell, so the box edge
    sits near three sigma from the center.
    """
    if not (box_w > 0 and box_h > 0):
        raise InvalidInputError("object dimensions must be positive")
    return (max(box_w / (6.0 * downsample), SIGMA_FLOOR),
            max(box_h / (6.0 * downsample), SIGMA_FLOOR))


def _splat_into(values: np.ndarray, channel: int, g: GaussianSpec) -> None:
    _, hh, hw = values.shape
    cx, cy = g.center
    if not (0 <= cx < hw and 0 <= cy < hh):
        raise InvalidInputError(f"splat center {g.center} outside heatmap bounds")
    ii = np.arange(hw) - cx
    jj = np.arange(hh) - cy
    blob = np.exp(-(jj[:, None] ** 2 / (2 * g.sigma_y ** 2)
                    + ii[None, :] ** 2 / (2 * g.sigma_x ** 2)))
    np.maximum(values[channel], blob, out=values[channel])


def splat(h: Heatmap, channel: int, g: GaussianSpec) -> Heatmap:
    """Max-compose one elliptical Gaussian into a channel; returns a new map.

    Cell (i, j) receives exp(-(dx^2 / (2 sx^2) + dy^2 / (2 sy^2))) with
    (dx, dy) = (i, j) - g.center, so the peak is 1 when the center lies on
    a cell.
    """
    if not (0 <= channel < h.channels):
        raise InvalidInputError(f"channel {channel} out of range")
    values = h.values.copy()
    _splat_into(values, channel, g)
    return Heatmap(values, h.downsample)


def render_prior(tracks, width: int, height: int,
                 downsample: int = DEFAULT_DOWNSAMPLE) -> Heatmap:
    """Single-channel map with one splat per live track at its reference center.

    Accepts any objects with ``ref_center`` (input pixels) and ``polygon``
    attributes; sigmas come from the polygon's bounding box.  Centers that
    fall outside the map (e.g. predicted past the image boundary) are
    skipped rather than rejected.
    """
    h = Heatmap.zeros(1, width, height, downsample)
    for t in tracks:
        cx, cy = t.ref_center
        gx, gy = cx / downsample, cy / downsample
        if not (0 <= gx < h.width and 0 <= gy < h.height):
            continue
        x0, y0, x1, y1 = t.polygon.bbox()
        sx, sy = object_sigmas(max(x1 - x0, 1e-6), max(y1 - y0, 1e-6), downsample)
        _splat_into(h.values, 0, GaussianSpec(Point2(gx, gy), sx, sy))
    return h
