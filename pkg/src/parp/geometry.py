"""Box overlap and multi-label non-maximum suppression."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .core import BBoxXYXY, ScoredBox, ValidationError

__all__ = ["ScoredBox", "iou", "iou_matrix", "nms_multilabel", "threshold_classes"]


def iou(a: BBoxXYXY, b: BBoxXYXY) -> float:
    """Intersection area over union area."""
    iw = min(a.x2, b.x2) - max(a.x1, b.x1)
    ih = min(a.y2, b.y2) - max(a.y1, b.y1)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    return inter / (a.area + b.area - inter)


def iou_matrix(a: Sequence[BBoxXYXY], b: Sequence[BBoxXYXY]) -> np.ndarray:
    """Pairwise IoU, shape ``[len(a), len(b)]``."""
    A = np.array([x.as_tuple() for x in a], dtype=float).reshape(-1, 4)
    B = np.array([x.as_tuple() for x in b], dtype=float).reshape(-1, 4)
    iw = np.minimum(A[:, None, 2], B[None, :, 2]) - np.maximum(A[:, None, 0], B[None, :, 0])
    ih = np.minimum(A[:, None, 3], B[None, :, 3]) - np.maximum(A[:, None, 1], B[None, :, 1])
    inter = np.clip(iw, 0, None) * np.clip(ih, 0, None)
    area_a = (A[:, 2] - A[:, 0]) * (A[:, 3] - A[:, 1])
    area_b = (B[:, 2] - B[:, 0]) * (B[:, 3] - B[:, 1])
    return inter / (area_a[:, None] + area_b[None, :] - inter)


def _check_unit(name: str, v: float) -> None:
    if not 0 <= v <= 1:
        raise ValidationError(f"{name} must lie in [0, 1], got {v}")


def threshold_classes(box: ScoredBox, conf_threshold: float) -> ScoredBox:
    """Zero class confidences whose ``objectness * confidence`` falls below the threshold."""
    conf = tuple(c if box.objectness * c >= conf_threshold else 0.0 for c in box.class_conf)
    return ScoredBox(box.bbox, box.objectness, conf)


def nms_multilabel(
    boxes: Sequence[ScoredBox], conf_threshold: float = 0.35, iou_threshold: float = 0.45
) -> list[ScoredBox]:
    """Greedy whole-box NMS for multi-label detections.

    Boxes are ranked by ``objectness * max(class_conf)``; those under
    ``conf_threshold`` are dropped, then any box overlapping an already
    kept box by more than ``iou_threshold`` is suppressed. Ties keep the
    earlier input. Survivors have their sub-threshold classes zeroed.
    Output is in descending score order.
    """
    _check_unit("conf_threshold", conf_threshold)
    _check_unit("iou_threshold", iou_threshold)
    scores = [b.score for b in boxes]
    cand = [i for i in range(len(boxes)) if scores[i] >= conf_threshold]
    cand.sort(key=lambda i: (-scores[i], i))
    if not cand:
        return []
    overlaps = iou_matrix([boxes[i].bbox for i in cand], [boxes[i].bbox for i in cand])
    alive = np.ones(len(cand), dtype=bool)
    keep = []
    for k in range(len(cand)):
        if not alive[k]:
            continue
        keep.append(cand[k])
        alive[k + 1 :] &= overlaps[k, k + 1 :] <= iou_threshold
    return [threshold_classes(boxes[i], conf_threshold) for i in keep]
