"""Lesion detection (per-class P/R/AP, mAP) and region detection (micro IoU) metrics."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from ..core import (
    BBoxXYXY,
    DetectionSet,
    LesionTaxonomy,
    RegionVocabulary,
    SceneGraph,
    ScoredBox,
    ValidationError,
)
from ..geometry import iou_matrix
from ..taxonomy import remove_root_redundancy

COCO_THRESHOLDS = tuple(round(0.5 + 0.05 * k, 2) for k in range(10))


@dataclass(frozen=True)
class GroundTruthBox:
    bbox: BBoxXYXY
    classes: frozenset[int]


@dataclass(frozen=True)
class DetectionEvalInput:
    image_id: str
    ground_truth: tuple[GroundTruthBox, ...]
    predictions: tuple[ScoredBox, ...]


@dataclass
class ClassMatches:
    """Score-sorted predictions of one class with their TP flags."""

    scores: np.ndarray
    tp: np.ndarray
    n_gt: int


def match_class(
    inputs: Sequence[DetectionEvalInput], cls: int, iou_threshold: float
) -> ClassMatches:
    """Greedy matching of class-``cls`` predictions to ground truth.

    Predictions across all images are visited by descending score
    ``objectness * class_conf[cls]`` (ties: image order, then input
    order). Each takes the unmatched same-image ground truth box of that
    class with the highest IoU, and is a TP if that IoU reaches the
    threshold. Predictions scoring 0 for the class are ignored.
    """
    entries = []
    gts = []
    for i, item in enumerate(inputs):
        gts.append([g.bbox for g in item.ground_truth if cls in g.classes])
        for k, p in enumerate(item.predictions):
            s = p.objectness * p.class_conf[cls]
            if s > 0:
                entries.append((-s, i, k))
    entries.sort()
    used = [np.zeros(len(g), dtype=bool) for g in gts]
    ious = {}
    tp = np.zeros(len(entries), dtype=bool)
    for n, (_, i, k) in enumerate(entries):
        if not gts[i]:
            continue
        if i not in ious:
            ious[i] = iou_matrix([p.bbox for p in inputs[i].predictions], gts[i])
        row = np.where(used[i], -1.0, ious[i][k])
        j = int(np.argmax(row))
        if row[j] >= iou_threshold:
            used[i][j] = True
            tp[n] = True
    scores = np.array([-e[0] for e in entries], dtype=float)
    return ClassMatches(scores, tp, sum(len(g) for g in gts))


def average_precision(tp: np.ndarray, n_gt: int) -> float:
    """Area under the all-point interpolated precision-recall curve."""
    if n_gt == 0:
        return float("nan")
    if len(tp) == 0:
        return 0.0
    ctp = np.cumsum(tp)
    cfp = np.cumsum(~tp)
    recall = ctp / n_gt
    precision = ctp / (ctp + cfp)
    mrec = np.concatenate(([0.0], recall, [1.0]))
    mpre = np.concatenate(([0.0], precision, [0.0]))
    mpre = np.maximum.accumulate(mpre[::-1])[::-1]
    steps = np.nonzero(mrec[1:] != mrec[:-1])[0]
    return float(np.sum((mrec[steps + 1] - mrec[steps]) * mpre[steps + 1]))


def _pr_at(m: ClassMatches, conf_threshold: float) -> tuple[float, float]:
    keep = m.scores >= conf_threshold
    n_pred = int(keep.sum())
    n_tp = int(m.tp[keep].sum())
    precision = n_tp / n_pred if n_pred else 0.0
    recall = n_tp / m.n_gt if m.n_gt else 0.0
    return precision, recall


def _mean(xs: Sequence[float]) -> float:
    return float(np.mean(xs)) if len(xs) else float("nan")


def detection_eval(
    inputs: Sequence[DetectionEvalInput],
    n_classes: int,
    iou_thresholds: Iterable[float] = (0.5, 0.95),
    conf_threshold: float = 0.35,
    class_names: Sequence[str] | None = None,
    coco_sweep: bool = False,
) -> dict:
    """Per-class precision/recall/AP and mAP at each IoU threshold.

    Multi-label ground truth boxes count once per active class. Precision
    and recall use predictions scoring at least ``conf_threshold``, matched
    at the first IoU threshold. mAP averages over classes that have ground
    truth; classes without any are reported and skipped. ``coco_sweep``
    adds the mean AP over IoU 0.50:0.05:0.95.
    """
    thresholds = [float(t) for t in iou_thresholds]
    if not thresholds or not all(0 <= t <= 1 for t in thresholds):
        raise ValidationError("IoU thresholds must lie in [0, 1]")
    names = list(class_names) if class_names is not None else [str(j) for j in range(n_classes)]
    for item in inputs:
        for p in item.predictions:
            if len(p.class_conf) != n_classes:
                raise ValidationError(
                    f"{item.image_id}: prediction has {len(p.class_conf)} classes, expected {n_classes}"
                )
    sweep = sorted(set(thresholds) | (set(COCO_THRESHOLDS) if coco_sweep else set()))
    per_class: dict[str, dict] = {}
    warns: list[str] = []
    aps: dict[float, list[float]] = {t: [] for t in sweep}
    precisions, recalls = [], []
    for c in range(n_classes):
        matches = {t: match_class(inputs, c, t) for t in sweep}
        n_gt = matches[sweep[0]].n_gt
        if n_gt == 0:
            if any(len(m.scores) for m in matches.values()):
                warns.append(f"class {names[c]!r} has predictions but no ground truth; excluded")
            continue
        p, r = _pr_at(matches[thresholds[0]], conf_threshold)
        row = {"n_gt": n_gt, "precision": p, "recall": r}
        for t in sweep:
            ap = average_precision(matches[t].tp, n_gt)
            aps[t].append(ap)
            if t in thresholds:
                row[f"ap@{t:g}"] = ap
        per_class[names[c]] = row
        precisions.append(p)
        recalls.append(r)
    if not per_class:
        warns.append("no ground truth instances for any class")
    for w in warns:
        warnings.warn(w, stacklevel=2)
    out = {
        "per_class": per_class,
        "map": {f"{t:g}": _mean(aps[t]) for t in thresholds},
        "mean_precision": _mean(precisions),
        "mean_recall": _mean(recalls),
        "n_classes_evaluated": len(per_class),
        "config": {"iou_thresholds": thresholds, "conf_threshold": conf_threshold, "coco_sweep": coco_sweep},
        "warnings": warns,
    }
    if coco_sweep:
        out["map_coco"] = _mean([_mean(aps[t]) for t in COCO_THRESHOLDS])
    return out


def region_eval(
    gt: Sequence[SceneGraph],
    pred: Sequence[DetectionSet] | Mapping[str, DetectionSet],
    vocab: RegionVocabulary | None = None,
) -> dict:
    """Micro-averaged IoU per region, its mean over regions, and detections per image.

    A region's micro IoU is total intersection over total union across the
    images whose ground truth contains it; a missed detection adds nothing
    to the intersection and the full ground-truth area to the union.
    """
    preds = pred if isinstance(pred, Mapping) else {d.image_id: d for d in pred}
    inter: dict[int, float] = {}
    union: dict[int, float] = {}
    n_detected = []
    for sg in gt:
        det = preds.get(sg.image_id)
        found = {r.index: r.bbox for r in det.region_detections} if det else {}
        n_detected.append(len(found))
        for r in sg.regions:
            box = found.get(r.index)
            if box is None:
                i, u = 0.0, r.bbox.area
            else:
                i = _intersection(r.bbox, box)
                u = r.bbox.area + box.area - i
            inter[r.index] = inter.get(r.index, 0.0) + i
            union[r.index] = union.get(r.index, 0.0) + u
    per_region = {k: inter[k] / union[k] for k in sorted(union)}
    label = (lambda k: vocab.name(k)) if vocab is not None else str
    return {
        "per_region": {label(k): v for k, v in per_region.items()},
        "average_iou": float(np.mean(list(per_region.values()))) if per_region else float("nan"),
        "detected_regions_per_image": float(np.mean(n_detected)) if n_detected else float("nan"),
        "n_images": len(gt),
    }


def _intersection(a: BBoxXYXY, b: BBoxXYXY) -> float:
    iw = min(a.x2, b.x2) - max(a.x1, b.x1)
    ih = min(a.y2, b.y2) - max(a.y1, b.y1)
    return iw * ih if iw > 0 and ih > 0 else 0.0


def gt_boxes_from_scene_graph(sg: SceneGraph, taxonomy: LesionTaxonomy) -> tuple[GroundTruthBox, ...]:
    """Lesion ground truth taken from region boxes that carry lesions, root-reduced."""
    return tuple(
        GroundTruthBox(r.bbox, remove_root_redundancy(r.lesions, taxonomy)) for r in sg.regions if r.lesions
    )
