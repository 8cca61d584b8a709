"""Shared domain types, vocabularies and validation.

Every type here is an immutable value. Constructors validate their
invariants and raise a subclass of :class:`ValidationError` on bad input,
so a successfully built object is always valid.
"""

from __future__ import annotations

import json
import math
import numbers
from dataclasses import dataclass
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import Any, Mapping, Sequence

NEG_TOKEN = "[NEG]"
N_REGIONS = 29
LEVELS = ("root", "second", "third", "independent")


class ParpError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(ParpError, ValueError):
    pass


class MalformedBoxError(ValidationError):
    pass


class UnknownRegionError(ValidationError):
    pass


class UnknownLesionError(ValidationError):
    pass


class DuplicateRegionError(ValidationError):
    pass


def _finite(*values: float) -> bool:
    return all(isinstance(v, numbers.Real) and not isinstance(v, bool) and math.isfinite(v) for v in values)


def _as_floats(obj, names: str) -> None:
    for n in names.split():
        v = getattr(obj, n)
        if isinstance(v, numbers.Real) and not isinstance(v, bool):
            object.__setattr__(obj, n, float(v))


@dataclass(frozen=True)
class BBoxXYXY:
    """Corner-form box: top-left ``(x1, y1)`` and bottom-right ``(x2, y2)``."""

    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self):
        _as_floats(self, "x1 y1 x2 y2")
        if not _finite(self.x1, self.y1, self.x2, self.y2):
            raise MalformedBoxError(f"non-finite box coordinates: {self.as_tuple()}")
        if min(self.x1, self.y1) < 0:
            raise MalformedBoxError(f"negative box coordinates: {self.as_tuple()}")
        if not (self.x1 < self.x2 and self.y1 < self.y2):
            raise MalformedBoxError(f"box needs x1 < x2 and y1 < y2, got {self.as_tuple()}")

    @property
    def width(self) -> float:
        return self.x2 - self.x1

    @property
    def height(self) -> float:
        return self.y2 - self.y1

    @property
    def area(self) -> float:
        return self.width * self.height

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x1, self.y1, self.x2, self.y2)

    def to_xywh(self) -> BBoxXYWH:
        return BBoxXYWH(
            (self.x1 + self.x2) / 2, (self.y1 + self.y2) / 2, self.x2 - self.x1, self.y2 - self.y1
        )

    @classmethod
    def from_seq(cls, seq: Sequence[float]) -> BBoxXYXY:
        if len(seq) != 4:
            raise MalformedBoxError(f"expected 4 box coordinates, got {len(seq)}")
        return cls(*(float(v) for v in seq))


@dataclass(frozen=True)
class BBoxXYWH:
    """Center-form box: center ``(x, y)``, width ``w`` and height ``h``."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        _as_floats(self, "x y w h")
        if not _finite(self.x, self.y, self.w, self.h):
            raise MalformedBoxError(f"non-finite box values: {self.as_tuple()}")
        if not (self.w > 0 and self.h > 0):
            raise MalformedBoxError(f"box extents must be positive: {self.as_tuple()}")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x, self.y, self.w, self.h)

    def to_xyxy(self) -> BBoxXYXY:
        return BBoxXYXY(
            self.x - self.w / 2, self.y - self.h / 2, self.x + self.w / 2, self.y + self.h / 2
        )


def convert_xywh_to_xyxy(b: BBoxXYWH) -> BBoxXYXY:
    return b.to_xyxy()


def convert_xyxy_to_xywh(b: BBoxXYXY) -> BBoxXYWH:
    return b.to_xywh()


def _load_json_resource(name: str) -> dict:
    return json.loads(resources.files("parp.data").joinpath(name).read_text(encoding="utf-8"))


def _load_json_or_yaml(path: str | Path) -> dict:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() in {".yaml", ".yml"}:
        import yaml

        return dict(yaml.safe_load(text))
    return dict(json.loads(text))


@dataclass(frozen=True)
class RegionVocabulary:
    """Ordered anatomical region names; region ``k`` (1-based) owns prompt slot ``k``."""

    names: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        if len(self.names) != N_REGIONS:
            raise ValidationError(f"region vocabulary needs {N_REGIONS} names, got {len(self.names)}")
        if len(set(self.names)) != len(self.names):
            raise ValidationError("region names must be unique")

    @cached_property
    def _lookup(self) -> dict[str, int]:
        return {n: i + 1 for i, n in enumerate(self.names)}

    def __len__(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        try:
            return self._lookup[name]
        except KeyError:
            raise UnknownRegionError(f"unknown region name {name!r}") from None

    def name(self, index: int) -> str:
        if not 1 <= index <= len(self.names):
            raise UnknownRegionError(f"region index {index} outside 1..{len(self.names)}")
        return self.names[index - 1]

    @classmethod
    def from_config(cls, cfg: Mapping[str, Any]) -> RegionVocabulary:
        return cls(tuple(r["name"] for r in cfg["regions"]))

    @classmethod
    def from_file(cls, path: str | Path) -> RegionVocabulary:
        return cls.from_config(_load_json_or_yaml(path))

    @classmethod
    def default(cls) -> RegionVocabulary:
        return cls.from_config(_load_json_resource("regions.json"))


@dataclass(frozen=True)
class LesionClass:
    name: str
    level: str
    parent: str | None = None
    frequency: float = 0.0


def normalize_token(name: str) -> str:
    """Prompt surface form of a class name: ``"pulmonary edema/hazy opacity"`` ->
    ``"pulmonary_edema_hazy_opacity"``."""
    return "_".join(name.lower().replace("/", " ").split())


@dataclass(frozen=True)
class LesionTaxonomy:
    """Lesion classes with hierarchy levels, parent links and training frequencies.

    Class indices are 0-based positions in ``classes`` and double as
    positions in multi-hot class vectors.
    """

    classes: tuple[LesionClass, ...]

    def __post_init__(self):
        object.__setattr__(self, "classes", tuple(self.classes))
        names = [c.name for c in self.classes]
        if len(set(names)) != len(names):
            raise ValidationError("lesion class names must be unique")
        by_name = {c.name: c for c in self.classes}
        roots = [c for c in self.classes if c.level == "root"]
        if len(roots) != 1:
            raise ValidationError(f"taxonomy needs exactly one root class, got {len(roots)}")
        tokens = [normalize_token(n) for n in names]
        if len(set(tokens)) != len(tokens) or NEG_TOKEN in tokens:
            raise ValidationError("normalized class tokens must be unique and differ from [NEG]")
        for c in self.classes:
            if c.level not in LEVELS:
                raise ValidationError(f"{c.name!r}: unknown level {c.level!r}")
            if not (math.isfinite(c.frequency) and c.frequency >= 0):
                raise ValidationError(f"{c.name!r}: frequency must be >= 0")
            parent = by_name.get(c.parent) if c.parent is not None else None
            if c.parent is not None and parent is None:
                raise ValidationError(f"{c.name!r}: unknown parent {c.parent!r}")
            expected = {"root": None, "independent": None, "second": "root", "third": "second"}[c.level]
            if (parent.level if parent else None) != expected:
                raise ValidationError(
                    f"{c.name!r}: a {c.level} class needs a {expected or 'missing'} parent"
                )

    @cached_property
    def _lookup(self) -> dict[str, int]:
        return {c.name: i for i, c in enumerate(self.classes)}

    def __len__(self) -> int:
        return len(self.classes)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.classes)

    @cached_property
    def root(self) -> int:
        return next(i for i, c in enumerate(self.classes) if c.level == "root")

    def _check(self, index: int) -> LesionClass:
        if not (isinstance(index, int) and 0 <= index < len(self.classes)):
            raise UnknownLesionError(f"lesion index {index!r} outside 0..{len(self.classes) - 1}")
        return self.classes[index]

    def index(self, name: str) -> int:
        try:
            return self._lookup[name]
        except KeyError:
            raise UnknownLesionError(f"unknown lesion name {name!r}") from None

    def name(self, index: int) -> str:
        return self._check(index).name

    def level(self, index: int) -> str:
        return self._check(index).level

    def parent(self, index: int) -> int | None:
        p = self._check(index).parent
        return None if p is None else self._lookup[p]

    def frequency(self, index: int) -> float:
        return self._check(index).frequency

    def token(self, index: int) -> str:
        return normalize_token(self._check(index).name)

    @cached_property
    def tokens(self) -> tuple[str, ...]:
        return tuple(normalize_token(c.name) for c in self.classes)

    def with_frequencies(self, freqs: Mapping[str, float]) -> LesionTaxonomy:
        """Copy with frequencies replaced for the named classes."""
        return LesionTaxonomy(
            tuple(
                LesionClass(c.name, c.level, c.parent, float(freqs.get(c.name, c.frequency)))
                for c in self.classes
            )
        )

    def to_config(self) -> dict:
        return {
            "schema_version": "1.0",
            "classes": [
                {"name": c.name, "level": c.level, "parent": c.parent, "frequency": c.frequency}
                for c in self.classes
            ],
        }

    @classmethod
    def from_config(cls, cfg: Mapping[str, Any]) -> LesionTaxonomy:
        return cls(
            tuple(
                LesionClass(d["name"], d["level"], d.get("parent"), float(d.get("frequency", 0.0)))
                for d in cfg["classes"]
            )
        )

    @classmethod
    def from_file(cls, path: str | Path) -> LesionTaxonomy:
        return cls.from_config(_load_json_or_yaml(path))

    @classmethod
    def default(cls) -> LesionTaxonomy:
        return cls.from_config(_load_json_resource("taxonomy.json"))


@dataclass(frozen=True)
class RegionEntry:
    index: int
    bbox: BBoxXYXY
    lesions: frozenset[int] = frozenset()


@dataclass(frozen=True)
class SceneGraph:
    """Per-image ground truth. ``findings`` is the report text, ``None`` when absent."""

    image_id: str
    regions: tuple[RegionEntry, ...]
    findings: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "regions", tuple(sorted(self.regions, key=lambda r: r.index)))
        seen = [r.index for r in self.regions]
        if len(set(seen)) != len(seen):
            raise DuplicateRegionError(f"{self.image_id}: duplicate region entries")
        if len(seen) > N_REGIONS:
            raise ValidationError(f"{self.image_id}: more than {N_REGIONS} regions")

    def region(self, index: int) -> RegionEntry | None:
        for r in self.regions:
            if r.index == index:
                return r
        return None

    @property
    def is_negative(self) -> bool:
        return all(not r.lesions for r in self.regions)


@dataclass(frozen=True)
class RegionDetection:
    index: int
    bbox: BBoxXYXY
    score: float = 1.0

    def __post_init__(self):
        if not (_finite(self.score) and 0 <= self.score <= 1):
            raise ValidationError(f"region score {self.score} outside [0, 1]")


@dataclass(frozen=True)
class ScoredBox:
    """Lesion detection: box, objectness and one confidence per lesion class."""

    bbox: BBoxXYXY
    objectness: float
    class_conf: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "class_conf", tuple(float(v) for v in self.class_conf))
        if not (_finite(self.objectness) and 0 <= self.objectness <= 1):
            raise ValidationError(f"objectness {self.objectness} outside [0, 1]")
        if not all(_finite(v) and 0 <= v <= 1 for v in self.class_conf):
            raise ValidationError("class confidences must lie in [0, 1]")

    @property
    def score(self) -> float:
        return self.objectness * max(self.class_conf, default=0.0)

    def class_scores(self) -> tuple[float, ...]:
        return tuple(self.objectness * c for c in self.class_conf)

    def active_classes(self, conf_threshold: float) -> frozenset[int]:
        return frozenset(j for j, s in enumerate(self.class_scores()) if s >= conf_threshold and s > 0)


@dataclass(frozen=True)
class DetectionSet:
    image_id: str
    region_detections: tuple[RegionDetection, ...] = ()
    lesion_detections: tuple[ScoredBox, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "region_detections", tuple(self.region_detections))
        object.__setattr__(self, "lesion_detections", tuple(self.lesion_detections))
        idx = [r.index for r in self.region_detections]
        if len(set(idx)) != len(idx):
            raise DuplicateRegionError(f"{self.image_id}: more than one detection per region")


# --- raw document <-> typed object -------------------------------------------------


def _field(d: Mapping[str, Any], key: str, where: str) -> Any:
    try:
        return d[key]
    except (KeyError, TypeError):
        raise ValidationError(f"{where}: missing field {key!r}") from None


def _box_from_raw(raw: Any, where: str, fmt: str = "xyxy") -> BBoxXYXY:
    try:
        vals = [float(v) for v in raw]
    except (TypeError, ValueError):
        raise MalformedBoxError(f"{where}: bbox must be a list of 4 numbers") from None
    try:
        if fmt == "xywh":
            if len(vals) != 4:
                raise MalformedBoxError(f"expected 4 box values, got {len(vals)}")
            return BBoxXYWH(*vals).to_xyxy()
        return BBoxXYXY.from_seq(vals)
    except MalformedBoxError as e:
        raise MalformedBoxError(f"{where}: {e}") from None


def validate_scene_graph(
    raw: Mapping[str, Any],
    vocab: RegionVocabulary | None = None,
    taxonomy: LesionTaxonomy | None = None,
) -> SceneGraph:
    """Build a :class:`SceneGraph` from a parsed scene-graph document.

    Region and lesion names are resolved against ``vocab`` and ``taxonomy``
    (shipped defaults when omitted).
    """
    vocab = vocab or RegionVocabulary.default()
    taxonomy = taxonomy or LesionTaxonomy.default()
    image_id = str(raw.get("image_id", ""))
    if not image_id:
        raise ValidationError("scene graph needs a non-empty image_id")
    entries = []
    seen = set()
    for k, r in enumerate(raw.get("regions", [])):
        where = f"{image_id}: regions[{k}]"
        idx = vocab.index(_field(r, "name", where))
        if idx in seen:
            raise DuplicateRegionError(f"{where}: duplicate region {r['name']!r}")
        seen.add(idx)
        lesions = frozenset(taxonomy.index(n) for n in r.get("lesions", []))
        entries.append(RegionEntry(idx, _box_from_raw(_field(r, "bbox", where), where), lesions))
    findings = raw.get("findings")
    return SceneGraph(image_id, tuple(entries), findings if isinstance(findings, str) else None)


def scene_graph_to_dict(
    sg: SceneGraph, vocab: RegionVocabulary | None = None, taxonomy: LesionTaxonomy | None = None
) -> dict:
    vocab = vocab or RegionVocabulary.default()
    taxonomy = taxonomy or LesionTaxonomy.default()
    doc: dict[str, Any] = {
        "schema_version": "1.0",
        "image_id": sg.image_id,
        "regions": [
            {
                "name": vocab.name(r.index),
                "bbox": list(r.bbox.as_tuple()),
                "lesions": [taxonomy.name(j) for j in sorted(r.lesions)],
            }
            for r in sg.regions
        ],
    }
    if sg.findings is not None:
        doc["findings"] = sg.findings
    return doc


def parse_detection_set(
    raw: Mapping[str, Any],
    vocab: RegionVocabulary | None = None,
    taxonomy: LesionTaxonomy | None = None,
) -> DetectionSet:
    """Build a :class:`DetectionSet` from a parsed detection document.

    Lesion ``class_conf`` maps class names to confidences; missing classes
    get 0. A lesion entry may carry ``"bbox_format": "xywh"``.
    """
    vocab = vocab or RegionVocabulary.default()
    taxonomy = taxonomy or LesionTaxonomy.default()
    image_id = str(raw.get("image_id", ""))
    if not image_id:
        raise ValidationError("detection document needs a non-empty image_id")
    regions = []
    for k, r in enumerate(raw.get("region_detections", [])):
        where = f"{image_id}: region_detections[{k}]"
        regions.append(
            RegionDetection(
                vocab.index(_field(r, "name", where)),
                _box_from_raw(_field(r, "bbox", where), where),
                float(r.get("score", 1.0)),
            )
        )
    lesions = []
    for k, d in enumerate(raw.get("lesion_detections", [])):
        where = f"{image_id}: lesion_detections[{k}]"
        conf = [0.0] * len(taxonomy)
        for name, v in d.get("class_conf", {}).items():
            conf[taxonomy.index(name)] = float(v)
        box = _box_from_raw(_field(d, "bbox", where), where, d.get("bbox_format", "xyxy"))
        lesions.append(ScoredBox(box, float(d.get("objectness", 1.0)), tuple(conf)))
    return DetectionSet(image_id, tuple(regions), tuple(lesions))


def detection_set_to_dict(
    ds: DetectionSet, vocab: RegionVocabulary | None = None, taxonomy: LesionTaxonomy | None = None
) -> dict:
    vocab = vocab or RegionVocabulary.default()
    taxonomy = taxonomy or LesionTaxonomy.default()
    return {
        "schema_version": "1.0",
        "image_id": ds.image_id,
        "region_detections": [
            {"name": vocab.name(r.index), "bbox": list(r.bbox.as_tuple()), "score": r.score}
            for r in ds.region_detections
        ],
        "lesion_detections": [
            {
                "bbox": list(b.bbox.as_tuple()),
                "objectness": b.objectness,
                "class_conf": {taxonomy.name(j): c for j, c in enumerate(b.class_conf) if c > 0},
            }
            for b in ds.lesion_detections
        ],
    }
