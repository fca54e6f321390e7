"""Mask-based tracking-and-segmentation evaluation.

Instances are rasterized farthest-first (larger depth value = farther), so
nearer masks overwrite and every frame becomes a set of pixel-disjoint
label masks.  Matching requires IoU > 0.5, which with disjoint masks on
both sides admits at most one candidate per mask; identity switches follow
the CLEAR convention (a ground-truth track's matched hypothesis id differs
from its most recent previously matched id).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import InvalidInputError
from .geometry import Polygon, rasterize

IOU_THRESHOLD = 0.5

# (instance id, polygon, depth); depth orders overlaps, smaller = nearer
InstanceTriple = tuple[int, Polygon, float]


@dataclass(frozen=True)
class FrameMatch:
    pairs: list[tuple[int, int, float]]  # (gt id, hyp id, iou), iou > 0.5
    fp_ids: list[int]
    fn_ids: list[int]


@dataclass(frozen=True)
class MetricsReport:
    """Aggregated counts and the scores derived from them (fractions)."""

    tp: int
    fp: int
    fn: int
    idsw: int
    soft_tp: float
    gt_total: int
    smotsa: float
    motsa: float
    motsp: float
    modsa: float
    recall: float
    precision: float

    @classmethod
    def from_counts(cls, tp: int, fp: int, fn: int, idsw: int,
                    soft_tp: float) -> "MetricsReport":
        g = tp + fn
        return cls(
            tp=tp, fp=fp, fn=fn, idsw=idsw, soft_tp=soft_tp, gt_total=g,
            smotsa=(soft_tp - fp - idsw) / g if g else 0.0,
            motsa=(tp - fp - idsw) / g if g else 0.0,
            motsp=soft_tp / tp if tp else 0.0,
            modsa=(tp - fp) / g if g else 0.0,
            recall=tp / (tp + fn) if tp + fn else 0.0,
            precision=tp / (tp + fp) if tp + fp else 0.0,
        )


def flatten_frame(instances: Iterable[InstanceTriple],
                  width: int, height: int) -> dict[int, np.ndarray]:
    """Disjoint visible masks for one frame's instances.

    Rasterizes in depth order so nearer instances overwrite farther ones;
    instances left with no visible pixels are omitted.
    """
    items = list(instances)
    for iid, _, depth in items:
        if depth is None or not np.isfinite(depth):
            raise InvalidInputError(f"instance {iid} lacks a finite depth")
    # farthest first; ties broken by id for determinism
    items.sort(key=lambda it: (-it[2], it[0]))
    label = np.zeros((height, width), dtype=np.int64)
    for iid, poly, _ in items:
        label[rasterize(poly, width, height)] = iid
    out: dict[int, np.ndarray] = {}
    for iid, _, _ in items:
        m = label == iid
        if m.any():
            out[iid] = m
    return out


def flatten(frames: Sequence[Iterable[InstanceTriple]],
            width: int, height: int) -> list[dict[int, np.ndarray]]:
    return [flatten_frame(f, width, height) for f in frames]


def _check_disjoint(masks: Mapping[int, np.ndarray], side: str) -> None:
    total = None
    for m in masks.values():
        total = m.astype(np.int32) if total is None else total + m
    if total is not None and (total > 1).any():
        raise InvalidInputError(f"{side} masks overlap within one frame")


def match_frame(gt: Mapping[int, np.ndarray],
                hyp: Mapping[int, np.ndarray]) -> FrameMatch:
    """Greedy IoU matching of one frame (descending IoU, ties by lower ids)."""
    _check_disjoint(gt, "ground-truth")
    _check_disjoint(hyp, "hypothesis")
    candidates = []
    for gid, gm in gt.items():
        g_area = np.count_nonzero(gm)
        for hid, hm in hyp.items():
            inter = np.count_nonzero(gm & hm)
            if inter == 0:
                continue
            iou = inter / (g_area + np.count_nonzero(hm) - inter)
            if iou > IOU_THRESHOLD:
                candidates.append((iou, gid, hid))
    candidates.sort(key=lambda c: (-c[0], c[1], c[2]))
    pairs = []
    used_g, used_h = set(), set()
    for iou, gid, hid in candidates:
        if gid in used_g or hid in used_h:
            continue
        used_g.add(gid)
        used_h.add(hid)
        pairs.append((gid, hid, float(iou)))
    fp_ids = sorted(h for h in hyp if h not in used_h)
    fn_ids = sorted(g for g in gt if g not in used_g)
    return FrameMatch(pairs=pairs, fp_ids=fp_ids, fn_ids=fn_ids)


def evaluate(gt_frames: Sequence[Mapping[int, np.ndarray]],
             hyp_frames: Sequence[Mapping[int, np.ndarray]]) -> MetricsReport:
    """Aggregate frame matches over an aligned pair of mask sequences."""
    if len(gt_frames) != len(hyp_frames):
        raise InvalidInputError(
            f"frame count mismatch: {len(gt_frames)} gt vs {len(hyp_frames)} hyp")
    tp = fp = fn = idsw = 0
    soft_tp = 0.0
    last_match: dict[int, int] = {}
    for gt, hyp in zip(gt_frames, hyp_frames):
        fm = match_frame(gt, hyp)
        tp += len(fm.pairs)
        fp += len(fm.fp_ids)
        fn += len(fm.fn_ids)
        soft_tp += sum(iou for _, _, iou in fm.pairs)
        for gid, hid, _ in fm.pairs:
            prev = last_match.get(gid)
            if prev is not None and prev != hid:
                idsw += 1
            last_match[gid] = hid
    return MetricsReport.from_counts(tp, fp, fn, idsw, soft_tp)


def evaluate_polygons(gt_frames: Sequence[Iterable[InstanceTriple]],
                      hyp_frames: Sequence[Iterable[InstanceTriple]],
                      width: int, height: int) -> MetricsReport:
    """Flatten both polygon sequences to masks, then evaluate."""
    return evaluate(flatten(gt_frames, width, height),
                    flatten(hyp_frames, width, height))
