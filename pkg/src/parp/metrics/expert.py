"""Aggregation of clinician scores: rubric grade, brevity, accuracy, danger."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from ..core import ValidationError

GRADES = ("X", "B2", "B1", "C", "A2", "A1")
# the six grades map onto 1-5; this default is a guess kept configurable
DEFAULT_RUBRIC_MAP = {"X": 1, "B2": 2, "B1": 3, "C": 3, "A2": 4, "A1": 5}

# reference-only row for formatted comparisons; not reproducible here
REPORTED_ROW = {"rubric": 2.26, "brevity": 0.01, "accuracy": 3.51, "danger": 0.03}


@dataclass(frozen=True)
class ExpertScore:
    rubric: str
    brevity: int
    accuracy: int
    danger: int
    sample_id: str = ""

    def __post_init__(self):
        if self.rubric not in GRADES:
            raise ValidationError(f"unknown rubric grade {self.rubric!r}")
        if self.brevity not in (-1, 0, 1):
            raise ValidationError(f"brevity must be -1, 0 or +1, got {self.brevity}")
        if self.accuracy not in (1, 2, 3, 4, 5):
            raise ValidationError(f"accuracy must be 1..5, got {self.accuracy}")
        if self.danger not in (0, 1):
            raise ValidationError(f"danger must be 0 or 1, got {self.danger}")


def aggregate_expert_scores(
    scores: Sequence[ExpertScore], rubric_map: Mapping[str, float] | None = None
) -> dict:
    """Mean rubric (numeric), brevity, accuracy and danger rate.

    Brevity is reported three ways: the signed mean, its absolute value,
    and the mean of absolute scores.
    """
    if not scores:
        raise ValidationError("no expert scores to aggregate")
    rmap = dict(DEFAULT_RUBRIC_MAP if rubric_map is None else rubric_map)
    missing = {s.rubric for s in scores} - set(rmap)
    if missing:
        raise ValidationError(f"rubric map lacks grades {sorted(missing)}")
    n = len(scores)
    brevity = sum(s.brevity for s in scores) / n
    return {
        "n": n,
        "rubric": sum(rmap[s.rubric] for s in scores) / n,
        "brevity": brevity,
        "brevity_abs": abs(brevity),
        "brevity_mean_abs": sum(abs(s.brevity) for s in scores) / n,
        "accuracy": sum(s.accuracy for s in scores) / n,
        "danger": sum(s.danger for s in scores) / n,
        "rubric_map": rmap,
    }
