"""Pathology-aware regional prompts.

A prompt holds one token per anatomical region, in vocabulary order: the
normalized name of the region's most informative lesion, or ``[NEG]``.
Training prompts come from scene graphs; inference prompts come from
region and lesion detections joined by IoU.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .core import (
    N_REGIONS,
    NEG_TOKEN,
    LesionTaxonomy,
    RegionDetection,
    RegionVocabulary,
    SceneGraph,
    ScoredBox,
    ValidationError,
)
from .geometry import iou_matrix

SEP_TOKEN = "<SEP>"
TEXT_PROMPT_HEADER = (
    "Please generate a report for this chest x-ray image. Here are some initial findings:"
)


@dataclass(frozen=True)
class RegionalPrompt:
    tokens: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        if len(self.tokens) != N_REGIONS:
            raise ValidationError(f"prompt needs {N_REGIONS} tokens, got {len(self.tokens)}")
        for t in self.tokens:
            if not t or t.split() != [t] or SEP_TOKEN in t:
                raise ValidationError(f"invalid prompt token {t!r}")

    @property
    def rendered(self) -> str:
        return " ".join(self.tokens)

    def __str__(self) -> str:
        return self.rendered

    def slot(self, region_index: int) -> str:
        return self.tokens[region_index - 1]

    def check_vocabulary(self, taxonomy: LesionTaxonomy) -> None:
        allowed = set(taxonomy.tokens) | {NEG_TOKEN}
        bad = [t for t in self.tokens if t not in allowed]
        if bad:
            raise ValidationError(f"tokens outside the lesion vocabulary: {bad}")

    @classmethod
    def negative(cls) -> RegionalPrompt:
        return cls((NEG_TOKEN,) * N_REGIONS)

    @classmethod
    def parse(cls, text: str) -> RegionalPrompt:
        return cls(tuple(text.split()))


@dataclass(frozen=True)
class RegionAssignment:
    """Chosen lesion box per detected region.

    ``pairs`` holds ``(region_index, lesion_position, iou)`` for assigned
    regions only; ``lesions`` are the boxes the positions point into.
    """

    lesions: tuple[ScoredBox, ...] = ()
    pairs: tuple[tuple[int, int, float], ...] = ()
    detected: frozenset[int] = frozenset()
    iou_threshold: float = 0.4

    def __post_init__(self):
        regions = [r for r, _, _ in self.pairs]
        if len(set(regions)) != len(regions):
            raise ValidationError("at most one lesion box per region")
        for r, k, v in self.pairs:
            if not 0 <= k < len(self.lesions):
                raise ValidationError(f"region {r}: lesion position {k} out of range")
            if v < self.iou_threshold:
                raise ValidationError(f"region {r}: assigned IoU {v} below threshold")

    def get(self, region_index: int) -> tuple[ScoredBox, float] | None:
        for r, k, v in self.pairs:
            if r == region_index:
                return self.lesions[k], v
        return None

    @property
    def assigned_regions(self) -> list[int]:
        return [r for r, _, _ in self.pairs]


def select_region_class(
    lesions: Iterable[int],
    taxonomy: LesionTaxonomy,
    frequencies: Mapping[int, float] | None = None,
) -> int | None:
    """Class index whose token represents a region with label set ``lesions``.

    Opacity-branch labels collapse first: a third-level class stands in for
    its second-level parent, and any second-level class outranks the bare
    root. If several candidates remain (distinct second-level classes,
    independent classes, or the root next to independent classes) the one
    with the lowest training frequency wins, ties going to the lower index.
    Returns ``None`` for an empty set.
    """
    lesions = set(lesions)
    if not lesions:
        return None
    second = set()
    independent = set()
    for j in lesions:
        level = taxonomy.level(j)
        if level == "second":
            second.add(j)
        elif level == "third":
            second.add(taxonomy.parent(j))
        elif level == "independent":
            independent.add(j)
    candidates = second | independent
    if not second and taxonomy.root in lesions:
        candidates.add(taxonomy.root)
    if len(candidates) == 1:
        return candidates.pop()
    freq = frequencies if frequencies is not None else {}
    return min(candidates, key=lambda j: (freq.get(j, taxonomy.frequency(j)), j))


def select_region_token(
    lesions: Iterable[int],
    taxonomy: LesionTaxonomy,
    frequencies: Mapping[int, float] | None = None,
) -> str:
    j = select_region_class(lesions, taxonomy, frequencies)
    return NEG_TOKEN if j is None else taxonomy.token(j)


def build_training_prompt(
    sg: SceneGraph, taxonomy: LesionTaxonomy, frequencies: Mapping[int, float] | None = None
) -> RegionalPrompt:
    tokens = [NEG_TOKEN] * N_REGIONS
    for r in sg.regions:
        tokens[r.index - 1] = select_region_token(r.lesions, taxonomy, frequencies)
    return RegionalPrompt(tuple(tokens))


def assign_lesions_to_regions(
    regions: Sequence[RegionDetection],
    lesions: Sequence[ScoredBox],
    iou_threshold: float = 0.4,
) -> RegionAssignment:
    """Give each detected region the lesion box it overlaps most, if that IoU reaches the threshold.

    A lesion box may serve several regions. Equal IoUs go to the earlier box.
    """
    if not 0 <= iou_threshold <= 1:
        raise ValidationError(f"iou_threshold must lie in [0, 1], got {iou_threshold}")
    lesions = tuple(lesions)
    detected = frozenset(r.index for r in regions)
    if not lesions or not regions:
        return RegionAssignment(lesions, (), detected, iou_threshold)
    ious = iou_matrix([r.bbox for r in regions], [b.bbox for b in lesions])
    pairs = []
    for r, row in zip(regions, ious):
        k = int(np.argmax(row))
        if row[k] >= iou_threshold:
            pairs.append((r.index, k, float(row[k])))
    pairs.sort()
    return RegionAssignment(lesions, tuple(pairs), detected, iou_threshold)


def build_inference_prompt(
    assignment: RegionAssignment,
    taxonomy: LesionTaxonomy,
    conf_threshold: float = 0.35,
    frequencies: Mapping[int, float] | None = None,
) -> RegionalPrompt:
    """Regions with an assigned box get the token for its active classes; the rest get ``[NEG]``."""
    tokens = [NEG_TOKEN] * N_REGIONS
    for region, k, _ in assignment.pairs:
        active = assignment.lesions[k].active_classes(conf_threshold)
        tokens[region - 1] = select_region_token(active, taxonomy, frequencies)
    return RegionalPrompt(tuple(tokens))


def _escape(report: str) -> str:
    return report.replace("\\", "\\\\").replace(SEP_TOKEN, "\\" + SEP_TOKEN)


_UNESCAPE = re.compile(r"\\(\\|" + re.escape(SEP_TOKEN) + ")")


def _unescape(text: str) -> str:
    return _UNESCAPE.sub(lambda m: m.group(1), text)


def serialize_training_sample(prompt: RegionalPrompt, report: str = "") -> str:
    """``"<29 tokens> <SEP> <report>"``; an empty report gives the inference form ``"<29 tokens> <SEP>"``.

    Backslashes and separator sequences inside the report are escaped.
    """
    head = f"{prompt.rendered} {SEP_TOKEN}"
    return head if report == "" else f"{head} {_escape(report)}"


def parse_training_sample(text: str) -> tuple[RegionalPrompt, str]:
    head, sep, tail = text.partition(f" {SEP_TOKEN}")
    if not sep or (tail and not tail.startswith(" ")):
        raise ValidationError("sample has no prompt/report separator")
    return RegionalPrompt.parse(head), _unescape(tail[1:])


def _join(items: Sequence[str]) -> str:
    return ", ".join(items)


def text_prompt_from_findings(lesion_regions: Mapping[str, Sequence[str]]) -> str:
    """Free-text prompt listing where each lesion may be.

    ``lesion_regions`` maps lesion names to region names, both in display
    order. Lesions found in exactly the same regions share one numbered line.
    """
    groups: dict[tuple[str, ...], list[str]] = {}
    for name, regions in lesion_regions.items():
        if regions:
            groups.setdefault(tuple(regions), []).append(name)
    lines = [TEXT_PROMPT_HEADER]
    for n, (regions, names) in enumerate(groups.items(), start=1):
        lines.append(f"{n}. {_join(names)} may be present in the {_join(regions)}.")
    return "\n".join(lines)


def build_text_prompt_ablation(
    assignment: RegionAssignment,
    vocab: RegionVocabulary,
    taxonomy: LesionTaxonomy,
    conf_threshold: float = 0.35,
) -> str:
    """Text prompt over every active class of every assigned box, lesions in class order."""
    lesion_regions: dict[str, list[str]] = {}
    for j in range(len(taxonomy)):
        regions = [
            vocab.name(region)
            for region, k, _ in sorted(assignment.pairs)
            if j in assignment.lesions[k].active_classes(conf_threshold)
        ]
        if regions:
            lesion_regions[taxonomy.name(j)] = regions
    return text_prompt_from_findings(lesion_regions)
