"""Clinical-efficacy precision/recall/F1 from observation label matrices."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core import ValidationError

CHEXBERT_OBSERVATIONS = (
    "enlarged cardiomediastinum",
    "cardiomegaly",
    "lung opacity",
    "lung lesion",
    "edema",
    "consolidation",
    "pneumonia",
    "atelectasis",
    "pneumothorax",
    "pleural effusion",
    "pleural other",
    "fracture",
    "support devices",
    "no finding",
)


@dataclass
class CEResult:
    precision: float
    recall: float
    f1: float
    mode: str
    undefined: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "averaging": self.mode,
            "undefined": list(self.undefined),
        }


def _binary(m, name: str) -> np.ndarray:
    a = np.asarray(m)
    if a.ndim != 2:
        raise ValidationError(f"{name} label matrix must be 2-D (images x observations)")
    if not np.isin(a, (0, 1)).all():
        raise ValidationError(f"{name} label matrix entries must be 0 or 1")
    return a.astype(bool)


def _ratio(num: float, den: float, what: str, undefined: list[str]) -> float:
    if den == 0:
        undefined.append(what)
        return 0.0
    return num / den


def _prf(tp: float, fp: float, fn: float, undefined: list[str], tag: str = "") -> tuple[float, float, float]:
    p = _ratio(tp, tp + fp, f"precision{tag}", undefined)
    r = _ratio(tp, tp + fn, f"recall{tag}", undefined)
    f = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f


def confusion_counts(candidate, reference) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-observation TP, FP and FN counts."""
    c, r = _binary(candidate, "candidate"), _binary(reference, "reference")
    if c.shape != r.shape:
        raise ValidationError(f"label matrix shapes differ: {c.shape} vs {r.shape}")
    tp = (c & r).sum(axis=0)
    fp = (c & ~r).sum(axis=0)
    fn = (~c & r).sum(axis=0)
    return tp, fp, fn


def ce_metrics(candidate, reference, mode: str = "micro") -> CEResult:
    """Precision, recall and F1 of candidate labels against reference labels.

    ``mode`` is ``"micro"`` (pooled over all image/observation cells),
    ``"macro"`` (mean over observations) or ``"example"`` (mean over
    images). Zero denominators score 0 and are listed in ``undefined``.
    """
    tp, fp, fn = confusion_counts(candidate, reference)
    undefined: list[str] = []
    if mode == "micro":
        p, r, f = _prf(tp.sum(), fp.sum(), fn.sum(), undefined)
    elif mode == "macro":
        rows = [_prf(a, b, c, undefined, f"[{j}]") for j, (a, b, c) in enumerate(zip(tp, fp, fn))]
        p, r, f = (float(np.mean(col)) for col in zip(*rows))
    elif mode == "example":
        cm, rm = _binary(candidate, "candidate"), _binary(reference, "reference")
        etp, efp, efn = (cm & rm).sum(1), (cm & ~rm).sum(1), (~cm & rm).sum(1)
        rows = [_prf(a, b, c, undefined, f"<{i}>") for i, (a, b, c) in enumerate(zip(etp, efp, efn))]
        p, r, f = (float(np.mean(col)) for col in zip(*rows))
    else:
        raise ValidationError(f"unknown averaging mode {mode!r}")
    return CEResult(float(p), float(r), float(f), mode, undefined)
