"""Data files, schema validation, run manifests and dataset ingestion.

Record files are JSON Lines (one document per line) or a JSON document
holding a single record or a list of them. Every record is checked against
the shipped JSON Schema of its kind before conversion; errors name the
file, the line (or list position) and the offending field.
"""

from __future__ import annotations

import datetime as _dt
import hashlib
import json
import logging
import math
import os
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import jsonschema

from . import __version__
from .core import (
    BBoxXYXY,
    LesionTaxonomy,
    ParpError,
    RegionVocabulary,
    SceneGraph,
    ValidationError,
    parse_detection_set,
    validate_scene_graph,
)
from .metrics.detection import DetectionEvalInput, GroundTruthBox
from .metrics.expert import ExpertScore

log = logging.getLogger(__name__)

SCHEMA_VERSION = "1.0"
# official split sizes after dropping reports without findings
REPORTED_SPLIT_SIZES = {"train": 113915, "validate": 15658, "test": 32711}


class SchemaError(ParpError):
    pass


@lru_cache(maxsize=1)
def schemas() -> dict[str, dict]:
    text = resources.files("parp.data").joinpath("schemas.json").read_text(encoding="utf-8")
    return json.loads(text)["schemas"]


def _where(path: str | Path, loc: str, err: jsonschema.ValidationError) -> str:
    field_path = "/".join(str(p) for p in err.absolute_path) or "<record>"
    return f"{path}:{loc}: {field_path}: {err.message}"


def read_records(path: str | Path, kind: str | None = None) -> list[dict]:
    """Load records from a ``.jsonl`` or ``.json`` file, validating each against schema ``kind``."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ParpError(f"cannot read {path}: {e.strerror or e}") from None
    items: list[tuple[str, Any]] = []
    if path.suffix.lower() == ".jsonl":
        for n, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                items.append((f"line {n}", json.loads(line)))
            except json.JSONDecodeError as e:
                raise SchemaError(f"{path}:line {n}: invalid JSON: {e.msg}") from None
    else:
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as e:
            raise SchemaError(f"{path}:line {e.lineno}: invalid JSON: {e.msg}") from None
        docs = doc if isinstance(doc, list) else [doc]
        items = [(f"item {k}", d) for k, d in enumerate(docs)]
    if kind is not None:
        validator = jsonschema.Draft202012Validator(schemas()[kind])
        for loc, d in items:
            err = jsonschema.exceptions.best_match(validator.iter_errors(d))
            if err is not None:
                raise SchemaError(_where(path, loc, err))
    return [d for _, d in items]


def read_document(path: str | Path, kind: str | None = None) -> dict:
    docs = read_records(path, kind)
    if len(docs) != 1:
        raise SchemaError(f"{path}: expected a single document, found {len(docs)}")
    return docs[0]


def _clean(obj: Any) -> Any:
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, Mapping):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def dumps(obj: Any) -> str:
    """Canonical JSON text: sorted keys, NaN/inf as null."""
    return json.dumps(_clean(obj), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def dumps_lines(records: Iterable[Any]) -> str:
    return "".join(json.dumps(_clean(r), sort_keys=True, ensure_ascii=False) + "\n" for r in records)


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_text(path: str | Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)


# --- typed loaders ---------------------------------------------------------------


def load_scene_graphs(path, vocab: RegionVocabulary, taxonomy: LesionTaxonomy) -> list[SceneGraph]:
    out = []
    for k, d in enumerate(read_records(path, "scene_graph")):
        try:
            out.append(validate_scene_graph(d, vocab, taxonomy))
        except ValidationError as e:
            raise SchemaError(f"{path}: record {k}: {e}") from None
    return out


def load_detections(path, vocab: RegionVocabulary, taxonomy: LesionTaxonomy):
    out = []
    for k, d in enumerate(read_records(path, "detection")):
        try:
            out.append(parse_detection_set(d, vocab, taxonomy))
        except ValidationError as e:
            raise SchemaError(f"{path}: record {k}: {e}") from None
    return out


def load_lesion_gt(path, taxonomy: LesionTaxonomy) -> dict[str, tuple[GroundTruthBox, ...]]:
    out = {}
    for k, d in enumerate(read_records(path, "lesion_gt")):
        try:
            out[d["image_id"]] = tuple(
                GroundTruthBox(BBoxXYXY.from_seq(g["bbox"]), frozenset(taxonomy.index(c) for c in g["classes"]))
                for g in d["lesions"]
            )
        except ValidationError as e:
            raise SchemaError(f"{path}: record {k}: {e}") from None
    return out


def lesion_gt_record(image_id: str, boxes: Sequence[GroundTruthBox], taxonomy: LesionTaxonomy) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "image_id": image_id,
        "lesions": [
            {"bbox": list(g.bbox.as_tuple()), "classes": [taxonomy.name(j) for j in sorted(g.classes)]}
            for g in boxes
        ],
    }


def detection_eval_inputs(
    detections, gt: Mapping[str, tuple[GroundTruthBox, ...]]
) -> list[DetectionEvalInput]:
    """Pair detection sets with lesion ground truth by image id; images missing a side get an empty one."""
    preds = {d.image_id: d.lesion_detections for d in detections}
    ids = list(gt) + [i for i in preds if i not in gt]
    return [DetectionEvalInput(i, gt.get(i, ()), preds.get(i, ())) for i in ids]


def load_label_matrix(path, observations: Sequence[str]) -> dict[str, list[int]]:
    out = {}
    for d in read_records(path, "label_vector"):
        labels = d["labels"]
        if isinstance(labels, dict):
            unknown = set(labels) - set(observations)
            if unknown:
                raise SchemaError(f"{path}: {d['image_id']}: unknown observations {sorted(unknown)}")
            labels = [int(labels.get(o, 0)) for o in observations]
        elif len(labels) != len(observations):
            raise SchemaError(
                f"{path}: {d['image_id']}: expected {len(observations)} labels, got {len(labels)}"
            )
        out[d["image_id"]] = list(labels)
    return out


def load_expert_scores(path) -> list[ExpertScore]:
    return [
        ExpertScore(d["rubric"], d["brevity"], d["accuracy"], d["danger"], d.get("sample_id", str(k)))
        for k, d in enumerate(read_records(path, "expert_score"))
    ]


def prompt_record(image_id: str, prompt, **extra) -> dict:
    rec = {
        "schema_version": SCHEMA_VERSION,
        "image_id": image_id,
        "tokens": list(prompt.tokens),
        "rendered": prompt.rendered,
    }
    rec.update(extra)
    return rec


# --- run manifests ---------------------------------------------------------------


@dataclass
class RunManifest:
    command: list[str]
    config: dict
    inputs: dict[str, str] = field(default_factory=dict)
    outputs: dict[str, str] = field(default_factory=dict)
    seed: int | None = None
    version: str = __version__
    started_at: str = ""
    finished_at: str = ""
    cwd: str = ""

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "command": list(self.command),
            "config": self.config,
            "inputs": dict(self.inputs),
            "outputs": dict(self.outputs),
            "seed": self.seed,
            "version": self.version,
            "started_at": self.started_at,
            "finished_at": self.finished_at,
            "cwd": self.cwd,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> RunManifest:
        return cls(
            list(d["command"]),
            dict(d["config"]),
            dict(d.get("inputs", {})),
            dict(d.get("outputs", {})),
            d.get("seed"),
            d.get("version", __version__),
            d.get("started_at", ""),
            d.get("finished_at", ""),
            d.get("cwd", ""),
        )

    @classmethod
    def load(cls, path: str | Path) -> RunManifest:
        return cls.from_dict(read_document(path, "manifest"))

    def write(self, path: str | Path) -> None:
        write_text(path, dumps(self.to_dict()))


def now_utc() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def digest_inputs(paths: Iterable[str | Path]) -> dict[str, str]:
    return {str(p): sha256_file(p) for p in paths if p is not None and os.path.isfile(p)}


# --- dataset ingestion -----------------------------------------------------------


def _hash_key(seed: int, image_id: str) -> str:
    return hashlib.sha256(f"{seed}:{image_id}".encode()).hexdigest()


def keep_count(n: int, fraction: float) -> int:
    """``floor(fraction * n)``, robust to binary rounding of ``fraction`` (0.12 * 100 -> 12)."""
    return math.floor(round(fraction * n, 9))


def subsample_negatives(ids: Sequence[str], fraction: float, seed: int) -> set[str]:
    """Deterministic subset of ``floor(fraction * len(ids))`` ids, ranked by a seeded hash of each id."""
    k = keep_count(len(ids), fraction)
    return set(sorted(ids, key=lambda i: (_hash_key(seed, i), i))[:k])


@dataclass
class IngestResult:
    samples: list[dict]
    counts: dict[str, dict[str, int]]
    warnings: list[str]


def ingest_dataset(
    paths: Sequence[str | Path],
    vocab: RegionVocabulary,
    taxonomy: LesionTaxonomy,
    require_findings: bool = True,
    negative_keep_fraction: float = 0.12,
    seed: int = 0,
    split_file: str | Path | None = None,
) -> IngestResult:
    """Filter scene-graph records for training.

    Records without a non-empty ``findings`` text are dropped when
    ``require_findings`` is set. Negative images (no lesions in any
    region) are then cut to ``floor(fraction * n)`` per split, chosen by a
    seeded hash of the image id so file order does not matter. Without a
    split file every record falls in split ``"all"``.
    """
    if not 0 <= negative_keep_fraction <= 1:
        raise ValidationError("negative_keep_fraction must lie in [0, 1]")
    records: list[dict] = []
    for p in paths:
        for d in read_records(p, "scene_graph"):
            try:
                sg = validate_scene_graph(d, vocab, taxonomy)
            except ValidationError as e:
                raise SchemaError(f"{p}: {d.get('image_id', '?')}: {e}") from None
            records.append({"doc": d, "sg": sg})
    ids = [r["sg"].image_id for r in records]
    if len(set(ids)) != len(ids):
        raise SchemaError("duplicate image ids across input files")
    split_of: dict[str, str] = {}
    warns: list[str] = []
    if split_file is not None:
        for d in read_records(split_file, "split_entry"):
            split_of[d["image_id"]] = d["split"]
    counts: dict[str, dict[str, int]] = {}
    by_split: dict[str, list[dict]] = {}
    for r in records:
        split = split_of.get(r["sg"].image_id, "all" if not split_of else "unassigned")
        c = counts.setdefault(split, {"input": 0, "no_findings": 0, "negatives": 0, "negatives_kept": 0, "retained": 0})
        c["input"] += 1
        findings = r["sg"].findings
        if require_findings and not (findings and findings.strip()):
            c["no_findings"] += 1
            continue
        by_split.setdefault(split, []).append(r)
    kept_ids: set[str] = set()
    for split, rs in by_split.items():
        neg = [r["sg"].image_id for r in rs if r["sg"].is_negative]
        keep_neg = subsample_negatives(neg, negative_keep_fraction, seed)
        counts[split]["negatives"] = len(neg)
        counts[split]["negatives_kept"] = len(keep_neg)
        for r in rs:
            if not r["sg"].is_negative or r["sg"].image_id in keep_neg:
                kept_ids.add(r["sg"].image_id)
                counts[split]["retained"] += 1
    if split_of:
        for split, expected in REPORTED_SPLIT_SIZES.items():
            c = counts.get(split)
            got = (c["input"] - c["no_findings"]) if c else 0
            if got != expected:
                msg = f"split {split!r}: {got} samples with findings, official split has {expected}"
                log.warning(msg)
                warns.append(msg)
    samples = [r["doc"] for r in records if r["sg"].image_id in kept_ids]
    return IngestResult(samples, counts, warns)
