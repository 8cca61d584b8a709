"""Seeded synthetic scenarios: ground-truth scene graphs plus perfect and noisy detector output.

Each image draws from two generators keyed by ``(seed, image_index)``:
one for ground truth and one for detector noise. Changing the noise
configuration therefore leaves the ground truth untouched, and images can
be generated independently of one another.

Lesions are placed on *sites*: a site is one region box carrying a
hierarchy-closed lesion set. Every region overlapping a site at or above
the assignment IoU inherits that site's lesions in the scene graph. Sites
are chosen so no region overlaps two of them at that level, which keeps
the ground truth consistent with how detections are assigned at
inference.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import (
    BBoxXYXY,
    DetectionSet,
    LesionTaxonomy,
    RegionDetection,
    RegionEntry,
    RegionVocabulary,
    SceneGraph,
    ScoredBox,
    ValidationError,
    _load_json_or_yaml,
)
from .geometry import iou_matrix, nms_multilabel
from .losses import SingleLabelRow, label_squeeze
from .metrics.detection import DetectionEvalInput, GroundTruthBox, detection_eval, region_eval
from .prompts import (
    RegionalPrompt,
    assign_lesions_to_regions,
    build_inference_prompt,
    build_training_prompt,
)
from .taxonomy import hierarchy_closure, remove_root_redundancy


@dataclass(frozen=True)
class NoiseConfig:
    box_jitter: float = 0.0
    region_drop: float = 0.0
    lesion_drop: float = 0.0
    false_positive_rate: float = 0.0
    confidence_noise: float = 0.0
    seed: int = 0

    def __post_init__(self):
        for name in ("region_drop", "lesion_drop"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise ValidationError(f"{name} must lie in [0, 1], got {v}")
        for name in ("box_jitter", "false_positive_rate", "confidence_noise"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v >= 0):
                raise ValidationError(f"{name} must be finite and >= 0, got {v}")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ValidationError(f"seed must be a non-negative integer, got {self.seed}")

    @classmethod
    def from_dict(cls, d: dict) -> NoiseConfig:
        d = {k: v for k, v in d.items() if k != "schema_version"}
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValidationError(f"unknown noise settings: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_file(cls, path: str | Path) -> NoiseConfig:
        return cls.from_dict(_load_json_or_yaml(path))


@dataclass(frozen=True)
class RegionTemplate:
    vocab: RegionVocabulary
    boxes: np.ndarray
    canvas: tuple[int, int] = (512, 512)

    @classmethod
    def from_config(cls, cfg: dict) -> RegionTemplate:
        vocab = RegionVocabulary.from_config(cfg)
        boxes = np.array([r["template_bbox"] for r in cfg["regions"]], dtype=float)
        return cls(vocab, boxes, tuple(cfg.get("canvas", (512, 512))))

    @classmethod
    def from_file(cls, path: str | Path) -> RegionTemplate:
        return cls.from_config(_load_json_or_yaml(path))

    @classmethod
    def default(cls) -> RegionTemplate:
        text = resources.files("parp.data").joinpath("regions.json").read_text(encoding="utf-8")
        return cls.from_config(json.loads(text))


@dataclass(frozen=True)
class ImageTruth:
    scene_graph: SceneGraph
    lesion_boxes: tuple[GroundTruthBox, ...]
    sites: tuple[int, ...]


@dataclass
class Scenario:
    truths: list[ImageTruth]
    perfect: list[DetectionSet]
    noisy: list[DetectionSet]
    expected_prompts: list[RegionalPrompt]
    noise: NoiseConfig
    taxonomy: LesionTaxonomy
    template: RegionTemplate
    settings: dict = field(default_factory=dict)

    @property
    def scene_graphs(self) -> list[SceneGraph]:
        return [t.scene_graph for t in self.truths]


def _choose_sites(order: Sequence[int], overlaps: np.ndarray, n_sites: int, iou_threshold: float) -> list[int]:
    covered = np.zeros(overlaps.shape[0], dtype=bool)
    sites = []
    for k in order:
        reach = overlaps[k] >= iou_threshold
        if (covered & reach).any():
            continue
        sites.append(int(k))
        covered |= reach
        if len(sites) == n_sites:
            break
    return sites


def _sample_lesions(rng: np.random.Generator, taxonomy: LesionTaxonomy, max_labels: int) -> frozenset[int]:
    freq = np.array([taxonomy.frequency(j) for j in range(len(taxonomy))], dtype=float)
    if freq.sum() <= 0:
        freq = np.ones_like(freq)
    k = int(rng.integers(1, max_labels + 1))
    picked = rng.choice(len(taxonomy), size=k, replace=False, p=freq / freq.sum())
    return hierarchy_closure((int(j) for j in picked), taxonomy)


def generate_image_truth(
    image_id: str,
    rng: np.random.Generator,
    taxonomy: LesionTaxonomy,
    template: RegionTemplate,
    p_negative: float = 0.3,
    max_sites: int = 4,
    max_labels: int = 3,
    assign_iou: float = 0.4,
) -> ImageTruth:
    w, h = template.canvas
    scale = rng.uniform(0.85, 1.0)
    dx, dy = rng.uniform(0, (1 - scale) * w), rng.uniform(0, (1 - scale) * h)
    boxes = template.boxes * scale + np.array([dx, dy, dx, dy])
    n = len(boxes)
    region_boxes = [BBoxXYXY(*map(float, b)) for b in boxes]
    overlaps = iou_matrix(region_boxes, region_boxes)
    sites: list[int] = []
    if rng.random() >= p_negative:
        n_sites = 1 + int(rng.binomial(max_sites - 1, 0.4))
        sites = _choose_sites(rng.permutation(n), overlaps, n_sites, assign_iou)
    site_labels = {k: _sample_lesions(rng, taxonomy, max_labels) for k in sites}

    entries = []
    for r in range(n):
        owner = next((k for k in sites if overlaps[k, r] >= assign_iou), None)
        lesions = site_labels[owner] if owner is not None else frozenset()
        entries.append(RegionEntry(r + 1, region_boxes[r], lesions))

    # lesion labels arrive as one row per (box, class); squeeze merges them
    rows = [
        SingleLabelRow(j, region_boxes[k].to_xywh())
        for k in sites
        for j in sorted(remove_root_redundancy(site_labels[k], taxonomy))
    ]
    rows = [rows[i] for i in rng.permutation(len(rows))]
    squeezed = label_squeeze(rows, len(taxonomy))
    lesion_boxes = tuple(GroundTruthBox(m.bbox.to_xyxy(), frozenset(m.active)) for m in squeezed)
    return ImageTruth(
        SceneGraph(image_id, tuple(entries), _findings_text(sites, site_labels, taxonomy, template)),
        lesion_boxes,
        tuple(sites),
    )


def _findings_text(
    sites: Sequence[int], labels: dict[int, frozenset[int]], taxonomy: LesionTaxonomy, template: RegionTemplate
) -> str:
    """Templated findings sentence per lesion site; consumes no randomness."""
    if not sites:
        return "No acute cardiopulmonary process."
    parts = []
    for k in sorted(sites):
        names = ", ".join(taxonomy.name(j) for j in sorted(labels[k]))
        parts.append(f"{names.capitalize()} in the {template.vocab.name(k + 1)}.")
    return " ".join(parts)


def perfect_detections(truth: ImageTruth, n_classes: int) -> DetectionSet:
    regions = tuple(RegionDetection(r.index, r.bbox, 1.0) for r in truth.scene_graph.regions)
    lesions = tuple(
        ScoredBox(g.bbox, 1.0, tuple(1.0 if j in g.classes else 0.0 for j in range(n_classes)))
        for g in truth.lesion_boxes
    )
    return DetectionSet(truth.scene_graph.image_id, regions, lesions)


def _jitter(box: BBoxXYXY, rng: np.random.Generator, sigma: float, canvas: tuple[int, int]) -> BBoxXYXY:
    e = rng.normal(0.0, sigma, size=4) if sigma > 0 else np.zeros(4)
    if not e.any():
        return box
    x1, y1, x2, y2 = np.array(box.as_tuple()) + e
    x1, x2 = sorted((x1, x2))
    y1, y2 = sorted((y1, y2))
    x1, y1 = max(x1, 0.0), max(y1, 0.0)
    x2, y2 = max(x2, x1 + 1.0), max(y2, y1 + 1.0)
    return BBoxXYXY(float(x1), float(y1), float(x2), float(y2))


def _noisy_conf(rng: np.random.Generator, sigma: float, on: bool) -> float:
    if sigma == 0:
        return 1.0 if on else 0.0
    d = abs(rng.normal(0.0, sigma))
    return float(np.clip(1.0 - d if on else d, 0.0, 1.0))


def perturb_detections(
    perfect: DetectionSet,
    rng: np.random.Generator,
    noise: NoiseConfig,
    canvas: tuple[int, int] = (512, 512),
) -> DetectionSet:
    """Apply drops, box jitter, confidence noise and false positives to a perfect detection set.

    The number of random draws per step does not depend on earlier
    outcomes, so e.g. the jitter applied to a box is the same whatever
    the drop rate.
    """
    regions = []
    for r in perfect.region_detections:
        dropped = rng.random() < noise.region_drop
        box = _jitter(r.bbox, rng, noise.box_jitter, canvas)
        if not dropped:
            regions.append(RegionDetection(r.index, box, r.score))
    lesions = []
    for b in perfect.lesion_detections:
        dropped = rng.random() < noise.lesion_drop
        box = _jitter(b.bbox, rng, noise.box_jitter, canvas)
        obj = _noisy_conf(rng, noise.confidence_noise, b.objectness > 0)
        conf = tuple(_noisy_conf(rng, noise.confidence_noise, c > 0) for c in b.class_conf)
        if not dropped:
            lesions.append(ScoredBox(box, obj, conf))
    n_fp = int(rng.poisson(noise.false_positive_rate)) if noise.false_positive_rate > 0 else 0
    n_classes = len(perfect.lesion_detections[0].class_conf) if perfect.lesion_detections else None
    for _ in range(n_fp):
        if n_classes is None:
            break
        w, h = rng.uniform(30, 150, size=2)
        x, y = rng.uniform(0, canvas[0] - w), rng.uniform(0, canvas[1] - h)
        conf = [0.0] * n_classes
        conf[int(rng.integers(n_classes))] = float(rng.uniform(0.3, 1.0))
        lesions.append(ScoredBox(BBoxXYXY(x, y, x + w, y + h), float(rng.uniform(0.3, 1.0)), tuple(conf)))
    return DetectionSet(perfect.image_id, tuple(regions), tuple(lesions))


def generate_scenario(
    n_images: int,
    taxonomy: LesionTaxonomy | None = None,
    template: RegionTemplate | None = None,
    noise: NoiseConfig = NoiseConfig(),
    p_negative: float = 0.3,
    max_sites: int = 4,
    max_labels: int = 3,
    assign_iou: float = 0.4,
) -> Scenario:
    if n_images < 1:
        raise ValidationError(f"n_images must be >= 1, got {n_images}")
    if not 0 <= p_negative <= 1 or max_sites < 1 or max_labels < 1:
        raise ValidationError("invalid scenario settings")
    taxonomy = taxonomy or LesionTaxonomy.default()
    template = template or RegionTemplate.default()
    truths, perfect, noisy, prompts = [], [], [], []
    for i in range(n_images):
        truth_rng = np.random.default_rng([noise.seed, i, 0])
        noise_rng = np.random.default_rng([noise.seed, i, 1])
        t = generate_image_truth(
            f"sim-{noise.seed}-{i:05d}", truth_rng, taxonomy, template, p_negative, max_sites, max_labels, assign_iou
        )
        p = perfect_detections(t, len(taxonomy))
        truths.append(t)
        perfect.append(p)
        noisy.append(perturb_detections(p, noise_rng, noise, template.canvas))
        prompts.append(build_training_prompt(t.scene_graph, taxonomy))
    settings = {
        "n_images": n_images,
        "p_negative": p_negative,
        "max_sites": max_sites,
        "max_labels": max_labels,
        "assign_iou": assign_iou,
    }
    return Scenario(truths, perfect, noisy, prompts, noise, taxonomy, template, settings)


@dataclass
class PipelineResult:
    prompts: list[RegionalPrompt]
    report: dict


def run_pipeline(
    scenario: Scenario,
    conf_threshold: float = 0.35,
    nms_iou: float = 0.45,
    assign_iou: float = 0.4,
    detections: Sequence[DetectionSet] | None = None,
) -> PipelineResult:
    """NMS, region assignment and prompt building on the scenario's noisy detections, then scoring.

    The report holds the prompt agreement rate (fraction of all region
    tokens equal to the expected training prompt), lesion detection
    metrics against the squeezed lesion ground truth, and region metrics.
    """
    taxonomy = scenario.taxonomy
    dets = list(scenario.noisy if detections is None else detections)
    prompts, eval_inputs = [], []
    for truth, det in zip(scenario.truths, dets):
        kept = nms_multilabel(det.lesion_detections, conf_threshold, nms_iou)
        assignment = assign_lesions_to_regions(det.region_detections, kept, assign_iou)
        prompts.append(build_inference_prompt(assignment, taxonomy, conf_threshold))
        eval_inputs.append(DetectionEvalInput(det.image_id, truth.lesion_boxes, tuple(kept)))
    agree = sum(
        a == b for p, q in zip(prompts, scenario.expected_prompts) for a, b in zip(p.tokens, q.tokens)
    )
    det_report = detection_eval(
        eval_inputs, len(taxonomy), (0.5, 0.95), conf_threshold, class_names=taxonomy.names
    )
    reg_report = region_eval(scenario.scene_graphs, dets, scenario.template.vocab)
    report = {
        "n_images": len(prompts),
        "prompt_agreement": agree / (len(prompts) * len(scenario.template.vocab)),
        "detection": det_report,
        "region": reg_report,
        "config": {
            "conf_threshold": conf_threshold,
            "nms_iou": nms_iou,
            "assign_iou": assign_iou,
            "noise": asdict(scenario.noise),
            "scenario": scenario.settings,
        },
    }
    return PipelineResult(prompts, report)
