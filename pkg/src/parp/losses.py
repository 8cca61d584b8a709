"""Label squeeze and the multi-label lesion detector loss.

The losses score already-matched target/prediction pairs; anchor
assignment and matching stay with the detector. All losses are per-image
sums (classification, objectness) or means (box MSE); batch reduction is
left to the caller.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import BBoxXYWH, ValidationError

EPS = 1e-7


@dataclass(frozen=True)
class SingleLabelRow:
    cls: int
    bbox: BBoxXYWH


@dataclass(frozen=True)
class MultiLabelBox:
    classes: tuple[int, ...]
    bbox: BBoxXYWH

    def __post_init__(self):
        object.__setattr__(self, "classes", tuple(int(v) for v in self.classes))
        if any(v not in (0, 1) for v in self.classes):
            raise ValidationError("class vector entries must be 0 or 1")
        if not any(self.classes):
            raise ValidationError("class vector needs at least one active class")

    @property
    def active(self) -> tuple[int, ...]:
        return tuple(j for j, v in enumerate(self.classes) if v)

    def as_row(self) -> list[float]:
        return [float(v) for v in self.classes] + list(self.bbox.as_tuple())


@dataclass(frozen=True)
class LossWeights:
    cls: float = 0.5
    obj: float = 1.0
    box: float = 0.05

    def __post_init__(self):
        for name in ("cls", "obj", "box"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v >= 0):
                raise ValidationError(f"loss weight {name} must be finite and >= 0, got {v}")


@dataclass(frozen=True)
class LossBreakdown:
    cls: float
    obj: float
    box: float
    total: float


def _same_box(a: tuple[float, ...], b: tuple[float, ...], tol: float) -> bool:
    if tol == 0:
        return a == b
    return all(abs(u - v) <= tol for u, v in zip(a, b))


def label_squeeze(
    rows: Sequence[SingleLabelRow], n_classes: int, tol: float = 0.0
) -> list[MultiLabelBox]:
    """Merge single-label rows that share box coordinates into multi-hot boxes.

    Boxes are compared coordinate-wise within absolute tolerance ``tol``
    (exact match by default); a row joins the first earlier group it
    matches and the group keeps that first box. Output order follows first
    appearance.
    """
    if tol < 0:
        raise ValidationError("tolerance must be >= 0")
    groups: list[tuple[BBoxXYWH, np.ndarray]] = []
    index: dict[tuple[float, ...], int] = {}
    for row in rows:
        if not 0 <= row.cls < n_classes:
            raise ValidationError(f"class index {row.cls} outside 0..{n_classes - 1}")
        key = row.bbox.as_tuple()
        g = index.get(key)
        if g is None and tol > 0:
            g = next((i for i, (b, _) in enumerate(groups) if _same_box(b.as_tuple(), key, tol)), None)
        if g is None:
            g = len(groups)
            groups.append((row.bbox, np.zeros(n_classes, dtype=np.int8)))
            index[key] = g
        groups[g][1][row.cls] = 1
    return [MultiLabelBox(tuple(vec.tolist()), box) for box, vec in groups]


def squeeze_array(labels: np.ndarray, n_classes: int, tol: float = 0.0) -> np.ndarray:
    """Array form of :func:`label_squeeze`: ``[N, 5]`` (class, x, y, w, h) -> ``[M, C + 4]``."""
    labels = np.asarray(labels, dtype=float).reshape(-1, 5)
    rows = [SingleLabelRow(int(r[0]), BBoxXYWH(*r[1:])) for r in labels]
    out = label_squeeze(rows, n_classes, tol)
    return np.array([m.as_row() for m in out], dtype=float).reshape(len(out), n_classes + 4)


def _pair(targets, predictions, what: str) -> tuple[np.ndarray, np.ndarray]:
    t = np.asarray(targets, dtype=float)
    p = np.asarray(predictions, dtype=float)
    if t.shape != p.shape:
        raise ValidationError(f"{what}: length mismatch, targets {t.shape} vs predictions {p.shape}")
    return t, p


def _bce_sum(t: np.ndarray, p: np.ndarray, eps: float) -> float:
    p = np.clip(p, eps, 1 - eps)
    return float(-(t * np.log(p) + (1 - t) * np.log1p(-p)).sum())


def classification_loss(targets, predictions, eps: float = EPS) -> float:
    """Binary cross-entropy summed over boxes and classes.

    ``targets`` and ``predictions`` are ``[M, C]``: multi-hot class vectors
    and predicted per-class confidences, clamped to ``[eps, 1 - eps]``.
    """
    t, p = _pair(targets, predictions, "classification_loss")
    return _bce_sum(t, p, eps)


def classification_loss_grad(targets, predictions, eps: float = EPS) -> np.ndarray:
    """Analytic derivative of :func:`classification_loss` w.r.t. the (clamped) predictions."""
    t, p = _pair(targets, predictions, "classification_loss_grad")
    p = np.clip(p, eps, 1 - eps)
    return -(t / p - (1 - t) / (1 - p))


def objectness_loss(targets, scores, eps: float = EPS) -> float:
    """Binary cross-entropy between presence targets (0/1) and presence scores, summed."""
    t, p = _pair(targets, scores, "objectness_loss")
    return _bce_sum(t, p, eps)


def _as_box_array(boxes) -> np.ndarray:
    if len(boxes) and isinstance(boxes[0], BBoxXYWH):
        return np.array([b.as_tuple() for b in boxes], dtype=float)
    return np.asarray(boxes, dtype=float).reshape(-1, 4)


def box_loss(targets, predictions) -> float:
    """Mean squared coordinate error, averaged over boxes and their 4 coordinates."""
    t, p = _pair(_as_box_array(targets), _as_box_array(predictions), "box_loss")
    if t.size == 0:
        return 0.0
    return float(np.mean((t - p) ** 2))


def total_loss(
    l_cls: float, l_obj: float, l_box: float, weights: LossWeights = LossWeights()
) -> LossBreakdown:
    for name, v in (("cls", l_cls), ("obj", l_obj), ("box", l_box)):
        if not v >= 0:
            raise ValidationError(f"component loss {name} must be >= 0, got {v}")
    total = weights.cls * l_cls + weights.obj * l_obj + weights.box * l_box
    return LossBreakdown(float(l_cls), float(l_obj), float(l_box), float(total))


def detector_loss(
    class_targets,
    class_preds,
    obj_targets,
    obj_scores,
    box_targets,
    box_preds,
    weights: LossWeights = LossWeights(),
) -> LossBreakdown:
    """All three components plus the weighted total for one image."""
    return total_loss(
        classification_loss(class_targets, class_preds),
        objectness_loss(obj_targets, obj_scores),
        box_loss(box_targets, box_preds),
        weights,
    )
