"""Reference training objectives with analytic gradients.

These are the plain-numpy definitions a training pipeline must reproduce:
the penalty-reduced focal loss on center heatmaps, L1 regression evaluated
only at object-center cells, their linear combination, and the
displacement target that supervises the tracking head.  Gradients are
returned alongside every loss so finite differences can audit them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .geometry import Point2

FOCAL_ALPHA = 2.0        # exponent on the prediction error
FOCAL_BETA = 4.0         # penalty reduction around soft-positive cells
PRED_CLAMP = 1e-4        # callers clamp predictions to [1e-4, 1 - 1e-4]


@dataclass(frozen=True)
class LossWeights:
    """Per-head weights of the combined objective."""

    w_hm: float = 1.0
    w_poly: float = 1.0
    w_depth: float = 0.1
    w_track: float = 1.0
    w_off: float = 1.0

    def __post_init__(self):
        for name in ("w_hm", "w_poly", "w_depth", "w_track", "w_off"):
            if getattr(self, name) < 0:
                raise InvalidInputError(f"{name} must be non-negative")


def focal_loss(pred: np.ndarray, gt: np.ndarray) -> tuple[float, np.ndarray]:
    """Penalty-reduced pixelwise focal loss and its gradient w.r.t. pred.

    At cells where gt == 1:   -(1 - p)^2 log p
    elsewhere:                -(1 - gt)^4 p^2 log(1 - p)
    normalized by the number of gt == 1 cells (at least 1).  Predictions
    must already be clamped to [1e-4, 1 - 1e-4].
    """
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if pred.shape != gt.shape:
        raise InvalidInputError(f"shape mismatch: {pred.shape} vs {gt.shape}")
    if np.any(pred < PRED_CLAMP) or np.any(pred > 1.0 - PRED_CLAMP):
        raise InvalidInputError("predictions must lie within [1e-4, 1 - 1e-4]")

    pos = gt == 1.0
    n_pos = max(int(np.count_nonzero(pos)), 1)
    grad = np.empty_like(pred)

    p = pred[pos]
    pos_terms = (1.0 - p) ** FOCAL_ALPHA * np.log(p)
    grad[pos] = (FOCAL_ALPHA * (1.0 - p) ** (FOCAL_ALPHA - 1.0) * np.log(p)
                 - (1.0 - p) ** FOCAL_ALPHA / p) / n_pos

    q = pred[~pos]
    damp = (1.0 - gt[~pos]) ** FOCAL_BETA
    neg_terms = damp * q ** FOCAL_ALPHA * np.log(1.0 - q)
    grad[~pos] = -damp * (FOCAL_ALPHA * q ** (FOCAL_ALPHA - 1.0) * np.log(1.0 - q)
                          - q ** FOCAL_ALPHA / (1.0 - q)) / n_pos

    loss = -(pos_terms.sum() + neg_terms.sum()) / n_pos
    return float(loss), grad


def l1_at_centers(pred: np.ndarray,
                  targets: list[tuple[tuple[int, int], np.ndarray]]
                  ) -> tuple[float, np.ndarray]:
    """Mean absolute error over object-center cells only.

    ``pred`` has shape (channels, height, width); each target is
    ((cell x, cell y), per-channel target vector).  Cells not listed
    contribute nothing; the sparse gradient is +-1/(N*C) at listed cells.
    """
    pred = np.asarray(pred, dtype=np.float64)
    if pred.ndim != 3:
        raise InvalidInputError(f"prediction map must be (C, H, W), got {pred.shape}")
    c, h, w = pred.shape
    grad = np.zeros_like(pred)
    if not targets:
        return 0.0, grad
    scale = 1.0 / (len(targets) * c)
    total = 0.0
    for (cx, cy), tvec in targets:
        if not (0 <= cx < w and 0 <= cy < h):
            raise InvalidInputError(f"center cell ({cx}, {cy}) outside {w}x{h} map")
        tvec = np.asarray(tvec, dtype=np.float64)
        if tvec.shape != (c,):
            raise InvalidInputError(f"target vector must have {c} channels")
        diff = pred[:, cy, cx] - tvec
        total += np.abs(diff).sum()
        grad[:, cy, cx] += np.sign(diff) * scale
    return float(total * scale), grad


def total_loss(l_hm: float, l_poly: float, l_depth: float, l_track: float,
               l_off: float, w: LossWeights) -> float:
    """Weighted sum of the five per-head losses."""
    parts = (l_hm, l_poly, l_depth, l_track, l_off)
    if not all(np.isfinite(parts)):
        raise InvalidInputError("loss parts must be finite")
    return (w.w_hm * l_hm + w.w_poly * l_poly + w.w_depth * l_depth
            + w.w_track * l_track + w.w_off * l_off)


def offset_target(center_t: Point2, center_tm1: Point2) -> tuple[float, float]:
    """Displacement ground truth: previous-frame center minus current center."""
    return (center_tm1[0] - center_t[0], center_tm1[1] - center_t[1])
