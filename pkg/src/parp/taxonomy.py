"""Lesion class reduction: tail-class filtering and root-redundancy removal."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

from .core import LesionTaxonomy, ValidationError


@dataclass(frozen=True)
class RawLabelStats:
    """Per-class label counts over a training corpus."""

    counts: Mapping[str, int]

    def __post_init__(self):
        object.__setattr__(self, "counts", dict(self.counts))
        for name, n in self.counts.items():
            if int(n) != n or n < 0:
                raise ValidationError(f"count for {name!r} must be a non-negative integer, got {n}")

    @property
    def total(self) -> int:
        return int(sum(self.counts.values()))

    def fractions(self) -> dict[str, float]:
        total = self.total
        if total == 0:
            raise ValidationError("empty corpus: total label count is 0")
        return {name: n / total for name, n in self.counts.items()}

    @classmethod
    def from_labels(cls, labels: Iterable[str]) -> RawLabelStats:
        counts: dict[str, int] = {}
        for name in labels:
            counts[name] = counts.get(name, 0) + 1
        return cls(counts)


def filter_tail_classes(stats: RawLabelStats, threshold: float = 0.005) -> set[str]:
    """Classes whose share of all training labels is at least ``threshold``."""
    if not 0 < threshold < 1:
        raise ValidationError(f"threshold must lie in (0, 1), got {threshold}")
    total = stats.total
    if total == 0:
        raise ValidationError("empty corpus: total label count is 0")
    # compare exactly against the decimal threshold so 5/1000 passes 0.005
    cut = Fraction(repr(float(threshold)))
    return {name for name, n in stats.counts.items() if Fraction(int(n), total) >= cut}


def remove_root_redundancy(labels: Iterable[int], taxonomy: LesionTaxonomy) -> frozenset[int]:
    """Drop the root class from a region's label set when a third-level class is present."""
    labels = frozenset(labels)
    for j in labels:
        taxonomy.name(j)
    if any(taxonomy.level(j) == "third" for j in labels):
        return labels - {taxonomy.root}
    return labels


def classify_level(index: int, taxonomy: LesionTaxonomy) -> str:
    return taxonomy.level(index)


def hierarchy_closure(labels: Iterable[int], taxonomy: LesionTaxonomy) -> frozenset[int]:
    """Add every ancestor of each label, the raw annotation convention before reduction."""
    out = set()
    for j in labels:
        while j is not None:
            out.add(j)
            j = taxonomy.parent(j)
    return frozenset(out)


def reduction_report(
    stats: RawLabelStats, threshold: float = 0.005, taxonomy: LesionTaxonomy | None = None
) -> dict:
    """Retained classes and per-class fractions for ``stats``.

    When ``taxonomy`` is given the report also lists retained names that
    the taxonomy lacks and taxonomy classes that the threshold dropped.
    """
    fractions = stats.fractions()
    retained = filter_tail_classes(stats, threshold)
    report = {
        "threshold": threshold,
        "total": stats.total,
        "n_input_classes": len(stats.counts),
        "n_retained": len(retained),
        "retained": sorted(retained, key=lambda n: (-fractions[n], n)),
        "fractions": {n: fractions[n] for n in sorted(fractions, key=lambda n: (-fractions[n], n))},
    }
    if taxonomy is not None:
        known = set(taxonomy.names)
        report["retained_not_in_taxonomy"] = sorted(retained - known)
        report["taxonomy_not_retained"] = sorted(known - retained)
    return report
