"""``parp`` command-line interface.

Exit codes: 0 success, 1 runtime failure (unreadable or invalid data),
2 usage error. Every file written with ``--out`` gets a run manifest next
to it; ``parp replay`` re-runs a manifest and checks the output digests.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import logging
import math
import os
import sys
from collections import Counter
from pathlib import Path
from typing import Any, Callable, Sequence

from . import __version__
from . import io as pio
from .core import (
    BBoxXYWH,
    LesionTaxonomy,
    ParpError,
    RegionVocabulary,
    _load_json_or_yaml,
    detection_set_to_dict,
    scene_graph_to_dict,
)
from .geometry import nms_multilabel
from .losses import LossWeights, SingleLabelRow, label_squeeze
from .metrics import Corpus, aggregate_expert_scores, ce_metrics, detection_eval, region_eval
from .metrics.clinical import CHEXBERT_OBSERVATIONS
from .metrics.nlg import nlg_report
from .prompts import (
    assign_lesions_to_regions,
    build_inference_prompt,
    build_text_prompt_ablation,
    build_training_prompt,
    serialize_training_sample,
    text_prompt_from_findings,
)
from .simulate import NoiseConfig, RegionTemplate, generate_scenario, run_pipeline
from .taxonomy import RawLabelStats, reduction_report

log = logging.getLogger("parp")

CONFIG_ENV = "PARP_CONFIG"
DEFAULT_SETTINGS: dict[str, Any] = {
    "taxonomy": None,
    "regions": None,
    "conf_threshold": 0.35,
    "nms_iou": 0.45,
    "assign_iou": 0.4,
    "loss_weights": {"cls": 0.5, "obj": 1.0, "box": 0.05},
    "tail_threshold": 0.005,
    "negative_keep_fraction": 0.12,
    "seed": 0,
}


class UsageError(Exception):
    pass


def unit_interval(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (math.isfinite(v) and 0 <= v <= 1):
        raise argparse.ArgumentTypeError(f"{text} is outside [0, 1]")
    return v


def non_negative_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (math.isfinite(v) and v >= 0):
        raise argparse.ArgumentTypeError(f"{text} must be finite and >= 0")
    return v


def positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"{text} must be >= 1")
    return v


def non_negative_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"{text} must be >= 0")
    return v


# --- settings --------------------------------------------------------------------


def load_settings(path: str | None) -> dict:
    """Defaults, overlaid with a config file (``--config`` or ``$PARP_CONFIG``)."""
    settings = json.loads(json.dumps(DEFAULT_SETTINGS))
    path = path or os.environ.get(CONFIG_ENV)
    if not path:
        return settings
    try:
        cfg = _load_json_or_yaml(path)
    except (OSError, ValueError) as e:
        raise ParpError(f"cannot load config {path}: {e}") from None
    unknown = set(cfg) - set(DEFAULT_SETTINGS) - {"schema_version"}
    if unknown:
        raise ParpError(f"config {path}: unknown keys {sorted(unknown)}")
    for key, value in cfg.items():
        if key == "loss_weights":
            settings[key].update(value)
        elif key != "schema_version":
            settings[key] = value
    base = Path(path).parent
    for key in ("taxonomy", "regions"):
        if settings[key] is not None and not os.path.isabs(settings[key]):
            settings[key] = str(base / settings[key])
    LossWeights(**settings["loss_weights"])
    return settings


def _taxonomy(settings: dict) -> LesionTaxonomy:
    return LesionTaxonomy.from_file(settings["taxonomy"]) if settings["taxonomy"] else LesionTaxonomy.default()


def _template(settings: dict) -> RegionTemplate:
    return RegionTemplate.from_file(settings["regions"]) if settings["regions"] else RegionTemplate.default()


def _vocab(settings: dict) -> RegionVocabulary:
    return _template(settings).vocab


# --- output plumbing -------------------------------------------------------------


class Run:
    """Collects input and output files of one command and writes its manifest."""

    def __init__(self, argv: Sequence[str], settings: dict, args: argparse.Namespace):
        self.argv = list(argv)
        self.settings = settings
        self.args = args
        self.inputs: list[str] = [p for p in (settings["taxonomy"], settings["regions"]) if p]
        self.outputs: list[str] = []
        self.started = pio.now_utc()

    def read(self, path: str) -> str:
        self.inputs.append(path)
        return path

    def emit(self, text: str, path: str | None) -> None:
        if path is None:
            sys.stdout.write(text)
        else:
            pio.write_text(path, text)
            self.outputs.append(path)

    def manifest(self, path: str) -> None:
        args = {k: v for k, v in vars(self.args).items() if k != "func"}
        m = pio.RunManifest(
            command=self.argv,
            config={"settings": self.settings, "args": args},
            inputs=pio.digest_inputs(self.inputs),
            outputs={p: pio.sha256_file(p) for p in self.outputs},
            seed=self.settings.get("seed"),
            started_at=self.started,
            finished_at=pio.now_utc(),
            cwd=os.getcwd(),
        )
        m.write(path)


def _finish(run: Run, out: str | None) -> None:
    if out is not None:
        run.manifest(f"{out}.manifest.json")


# --- commands --------------------------------------------------------------------


def cmd_reduce(run: Run) -> int:
    a, s = run.args, run.settings
    threshold = s["tail_threshold"] if a.threshold is None else a.threshold
    if a.stats:
        stats = RawLabelStats(dict(pio.read_document(run.read(a.stats), "label_stats")["counts"]))
    else:
        names = [lab["class"] for d in pio.read_records(run.read(a.labels), "single_labels") for lab in d["labels"]]
        stats = RawLabelStats.from_labels(names)
    report = reduction_report(stats, threshold, _taxonomy(s))
    run.emit(pio.dumps(report), a.out)
    _finish(run, a.out)
    return 0


def cmd_squeeze(run: Run) -> int:
    a = run.args
    taxonomy = _taxonomy(run.settings)
    records, n_rows, hist = [], 0, Counter()
    for d in pio.read_records(run.read(a.labels), "single_labels"):
        where = d["image_id"]
        try:
            rows = [SingleLabelRow(taxonomy.index(lab["class"]), BBoxXYWH(*lab["bbox"])) for lab in d["labels"]]
        except ParpError as e:
            raise ParpError(f"{a.labels}: {where}: {e}") from None
        boxes = label_squeeze(rows, len(taxonomy), a.tol)
        n_rows += len(rows)
        hist.update(len(b.active) for b in boxes)
        records.append(
            {
                "schema_version": pio.SCHEMA_VERSION,
                "image_id": where,
                "boxes": [
                    {"bbox": list(b.bbox.as_tuple()), "classes": [taxonomy.name(j) for j in b.active]}
                    for b in boxes
                ],
            }
        )
    run.emit(pio.dumps_lines(records), a.out)
    n_boxes = sum(hist.values())
    summary = ", ".join(f"{k} label(s): {hist[k]}" for k in sorted(hist))
    print(f"rows N={n_rows}  boxes M={n_boxes}  [{summary}]", file=sys.stderr)
    _finish(run, a.out)
    return 0


def _lesion_regions(sg, vocab: RegionVocabulary, taxonomy: LesionTaxonomy) -> dict[str, list[str]]:
    out: dict[str, list[str]] = {}
    for j in range(len(taxonomy)):
        regions = [vocab.name(r.index) for r in sg.regions if j in r.lesions]
        if regions:
            out[taxonomy.name(j)] = regions
    return out


def cmd_prompt_train(run: Run) -> int:
    a, s = run.args, run.settings
    taxonomy, vocab = _taxonomy(s), _vocab(s)
    graphs = pio.load_scene_graphs(run.read(a.scene_graphs), vocab, taxonomy)
    reports = {}
    if a.reports:
        reports = {d["image_id"]: d["report"] for d in pio.read_records(run.read(a.reports), "report_text")}
    records = []
    for sg in graphs:
        prompt = build_training_prompt(sg, taxonomy)
        report = reports.get(sg.image_id, sg.findings or "")
        extra = {"sample": serialize_training_sample(prompt, report)}
        if a.text_prompt:
            extra["text_prompt"] = text_prompt_from_findings(_lesion_regions(sg, vocab, taxonomy))
        records.append(pio.prompt_record(sg.image_id, prompt, **extra))
    run.emit(pio.dumps_lines(records), a.out)
    _finish(run, a.out)
    return 0


def cmd_prompt_infer(run: Run) -> int:
    a, s = run.args, run.settings
    taxonomy, vocab = _taxonomy(s), _vocab(s)
    conf = s["conf_threshold"] if a.conf is None else a.conf
    nms_iou = s["nms_iou"] if a.nms_iou is None else a.nms_iou
    assign_iou = s["assign_iou"] if a.iou is None else a.iou
    records = []
    for det in pio.load_detections(run.read(a.detections), vocab, taxonomy):
        boxes = det.lesion_detections if a.skip_nms else nms_multilabel(det.lesion_detections, conf, nms_iou)
        assignment = assign_lesions_to_regions(det.region_detections, boxes, assign_iou)
        prompt = build_inference_prompt(assignment, taxonomy, conf)
        extra = {"sample": serialize_training_sample(prompt)}
        if a.text_prompt:
            extra["text_prompt"] = build_text_prompt_ablation(assignment, vocab, taxonomy, conf)
        records.append(pio.prompt_record(det.image_id, prompt, **extra))
    run.emit(pio.dumps_lines(records), a.out)
    _finish(run, a.out)
    return 0


def _paired(pred: dict, ref: dict, what: str) -> list[str]:
    missing = sorted(set(ref) - set(pred))
    extra = sorted(set(pred) - set(ref))
    if missing or extra:
        raise ParpError(f"{what}: ids differ (missing predictions: {missing[:5]}, unmatched: {extra[:5]})")
    return sorted(ref)


def cmd_eval_nlg(run: Run) -> int:
    a = run.args
    pred = {d["image_id"]: d["report"] for d in pio.read_records(run.read(a.pred), "report_text")}
    ref = {d["image_id"]: d["report"] for d in pio.read_records(run.read(a.ref), "report_text")}
    ids = _paired(pred, ref, "nlg")
    corpus = Corpus(tuple(ids), tuple(pred[i] for i in ids), tuple(ref[i] for i in ids))
    result = nlg_report(corpus, smooth=a.smooth, rouge_beta=a.rouge_beta)
    run.emit(pio.dumps(result), a.out)
    _finish(run, a.out)
    return 0


def cmd_eval_ce(run: Run) -> int:
    a = run.args
    obs = CHEXBERT_OBSERVATIONS
    pred = pio.load_label_matrix(run.read(a.pred), obs)
    ref = pio.load_label_matrix(run.read(a.ref), obs)
    ids = _paired(pred, ref, "ce")
    cand = [pred[i] for i in ids]
    refm = [ref[i] for i in ids]
    modes = ("micro", "macro", "example") if a.average == "all" else (a.average,)
    result = {"n": len(ids), "observations": list(obs)}
    result.update({m: ce_metrics(cand, refm, m).as_dict() for m in modes})
    run.emit(pio.dumps(result), a.out)
    _finish(run, a.out)
    return 0


def cmd_eval_det(run: Run) -> int:
    a, s = run.args, run.settings
    taxonomy, vocab = _taxonomy(s), _vocab(s)
    conf = s["conf_threshold"] if a.conf is None else a.conf
    dets = pio.load_detections(run.read(a.pred), vocab, taxonomy)
    gt = pio.load_lesion_gt(run.read(a.ref), taxonomy)
    inputs = pio.detection_eval_inputs(dets, gt)
    result = detection_eval(inputs, len(taxonomy), a.iou, conf, taxonomy.names, a.coco)
    run.emit(pio.dumps(result), a.out)
    _finish(run, a.out)
    return 0


def cmd_eval_region(run: Run) -> int:
    a, s = run.args, run.settings
    taxonomy, vocab = _taxonomy(s), _vocab(s)
    dets = pio.load_detections(run.read(a.pred), vocab, taxonomy)
    graphs = pio.load_scene_graphs(run.read(a.ref), vocab, taxonomy)
    result = region_eval(graphs, dets, vocab)
    run.emit(pio.dumps(result), a.out)
    _finish(run, a.out)
    return 0


def cmd_eval_expert(run: Run) -> int:
    a = run.args
    scores = pio.load_expert_scores(run.read(a.scores))
    rubric_map = None
    if a.rubric_map:
        rubric_map = _load_json_or_yaml(run.read(a.rubric_map))
    result = aggregate_expert_scores(scores, rubric_map)
    run.emit(pio.dumps(result), a.out)
    _finish(run, a.out)
    return 0


def cmd_simulate(run: Run) -> int:
    a, s = run.args, run.settings
    taxonomy, template = _taxonomy(s), _template(s)
    noise_cfg: dict[str, Any] = {}
    if a.noise:
        noise_cfg.update(pio.read_document(run.read(a.noise), "noise_config"))
    for key in ("box_jitter", "region_drop", "lesion_drop", "false_positive_rate", "confidence_noise"):
        if getattr(a, key) is not None:
            noise_cfg[key] = getattr(a, key)
    noise_cfg["seed"] = a.seed if a.seed is not None else noise_cfg.get("seed", s["seed"])
    s["seed"] = noise_cfg["seed"]
    noise = NoiseConfig.from_dict(noise_cfg)
    scenario = generate_scenario(
        a.images, taxonomy, template, noise, a.p_negative, a.max_sites, a.max_labels, s["assign_iou"]
    )
    result = run_pipeline(scenario, s["conf_threshold"], s["nms_iou"], s["assign_iou"])
    vocab = template.vocab
    out = Path(a.out)
    files = {
        "scene_graphs.jsonl": [scene_graph_to_dict(sg, vocab, taxonomy) for sg in scenario.scene_graphs],
        "lesion_gt.jsonl": [
            pio.lesion_gt_record(t.scene_graph.image_id, t.lesion_boxes, taxonomy) for t in scenario.truths
        ],
        "detections_perfect.jsonl": [detection_set_to_dict(d, vocab, taxonomy) for d in scenario.perfect],
        "detections.jsonl": [detection_set_to_dict(d, vocab, taxonomy) for d in scenario.noisy],
        "expected_prompts.jsonl": [
            pio.prompt_record(t.scene_graph.image_id, p) for t, p in zip(scenario.truths, scenario.expected_prompts)
        ],
        "inferred_prompts.jsonl": [
            pio.prompt_record(t.scene_graph.image_id, p) for t, p in zip(scenario.truths, result.prompts)
        ],
    }
    for name, records in files.items():
        run.emit(pio.dumps_lines(records), str(out / name))
    run.emit(pio.dumps(result.report), str(out / "report.json"))
    det = result.report["detection"]
    print(
        f"images={a.images} agreement={result.report['prompt_agreement']:.4f} "
        f"mAP@0.5={det['map']['0.5']:.4f} mAP@0.95={det['map']['0.95']:.4f} "
        f"region_iou={result.report['region']['average_iou']:.4f}"
    )
    run.manifest(str(out / "manifest.json"))
    return 0


def cmd_ingest(run: Run) -> int:
    a, s = run.args, run.settings
    taxonomy, vocab = _taxonomy(s), _vocab(s)
    fraction = s["negative_keep_fraction"] if a.keep_fraction is None else a.keep_fraction
    seed = s["seed"] if a.seed is None else a.seed
    s["negative_keep_fraction"], s["seed"] = fraction, seed
    result = pio.ingest_dataset(
        [run.read(p) for p in a.scene_graphs],
        vocab,
        taxonomy,
        require_findings=not a.allow_missing_findings,
        negative_keep_fraction=fraction,
        seed=seed,
        split_file=run.read(a.split_file) if a.split_file else None,
    )
    run.emit(pio.dumps_lines(result.samples), a.out)
    summary = {"counts": result.counts, "warnings": result.warnings}
    if a.out is not None:
        run.emit(pio.dumps(summary), f"{a.out}.counts.json")
    else:
        print(pio.dumps(summary), file=sys.stderr, end="")
    _finish(run, a.out)
    return 0


def cmd_replay(run: Run) -> int:
    a = run.args
    manifest = pio.RunManifest.load(a.manifest)
    if not manifest.command or manifest.command[0] == "replay":
        raise ParpError(f"{a.manifest}: nothing to replay")
    cwd = manifest.cwd or os.getcwd()
    with _chdir(cwd):
        for path, digest in manifest.inputs.items():
            if not os.path.isfile(path) or pio.sha256_file(path) != digest:
                print(f"warning: input {path} differs from the recorded run", file=sys.stderr)
        if not a.check:
            code = _execute(manifest.command, settings=manifest.config["settings"])
            if code != 0:
                return code
        bad = [p for p, d in manifest.outputs.items() if not os.path.isfile(p) or pio.sha256_file(p) != d]
    for p in bad:
        print(f"MISMATCH {p}", file=sys.stderr)
    print(f"{len(manifest.outputs) - len(bad)}/{len(manifest.outputs)} outputs identical")
    return 1 if bad else 0


@contextlib.contextmanager
def _chdir(path: str):
    old = os.getcwd()
    os.chdir(path)
    try:
        yield
    finally:
        os.chdir(old)


# --- parser ----------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="parp", description="Pathology-aware regional prompts: data tools, metrics and simulation.")
    p.add_argument("--version", action="version", version=f"parp {__version__}")
    p.add_argument("--config", help=f"JSON/YAML settings file (default: ${CONFIG_ENV})")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(parent, name: str, func: Callable[[Run], int], help: str) -> argparse.ArgumentParser:
        sp = parent.add_parser(name, help=help, description=help)
        sp.set_defaults(func=func)
        return sp

    def out(sp, required: bool = False) -> None:
        sp.add_argument("--out", required=required, help="output path (stdout when omitted)")

    sp = add(sub, "reduce", cmd_reduce, "Keep lesion classes at or above the tail-frequency threshold.")
    src = sp.add_mutually_exclusive_group(required=True)
    src.add_argument("--stats", help="label_stats document with per-class counts")
    src.add_argument("--labels", help="single_labels records to count")
    sp.add_argument("--threshold", type=unit_interval)
    out(sp)

    sp = add(sub, "squeeze", cmd_squeeze, "Merge same-box single-label rows into multi-hot boxes.")
    sp.add_argument("--labels", required=True, help="single_labels records, boxes as [x, y, w, h]")
    sp.add_argument("--tol", type=non_negative_float, default=0.0, help="coordinate tolerance (default exact)")
    out(sp)

    prompt = sub.add_parser("prompt", help="Build regional prompts.")
    psub = prompt.add_subparsers(dest="prompt_command", required=True, parser_class=_Parser)
    sp = add(psub, "train", cmd_prompt_train, "Training prompts from scene graphs.")
    sp.add_argument("--scene-graphs", required=True)
    sp.add_argument("--reports", help="report_text records; defaults to each scene graph's findings")
    sp.add_argument("--text-prompt", action="store_true", help="add the free-text prompt variant")
    out(sp)
    sp = add(psub, "infer", cmd_prompt_infer, "Inference prompts from region and lesion detections.")
    sp.add_argument("--detections", required=True)
    sp.add_argument("--iou", type=unit_interval, help="region/lesion assignment IoU (default 0.4)")
    sp.add_argument("--conf", type=unit_interval, help="confidence threshold (default 0.35)")
    sp.add_argument("--nms-iou", type=unit_interval, help="NMS IoU threshold (default 0.45)")
    sp.add_argument("--skip-nms", action="store_true", help="detections are already suppressed")
    sp.add_argument("--text-prompt", action="store_true", help="add the free-text prompt variant")
    out(sp)

    ev = sub.add_parser("eval", help="Evaluation metrics.")
    esub = ev.add_subparsers(dest="eval_command", required=True, parser_class=_Parser)
    sp = add(esub, "nlg", cmd_eval_nlg, "BLEU-1..4, ROUGE-L and METEOR over report pairs.")
    sp.add_argument("--pred", required=True)
    sp.add_argument("--ref", required=True)
    sp.add_argument("--smooth", action="store_true", help="add-one smoothing for BLEU orders >= 2")
    sp.add_argument("--rouge-beta", type=non_negative_float, default=1.2)
    out(sp)
    sp = add(esub, "ce", cmd_eval_ce, "Clinical-efficacy precision/recall/F1 over observation labels.")
    sp.add_argument("--pred", required=True)
    sp.add_argument("--ref", required=True)
    sp.add_argument("--average", choices=("micro", "macro", "example", "all"), default="micro")
    out(sp)
    sp = add(esub, "det", cmd_eval_det, "Per-class precision/recall/AP and mAP of lesion detections.")
    sp.add_argument("--pred", required=True, help="detection records")
    sp.add_argument("--ref", required=True, help="lesion_gt records")
    sp.add_argument("--iou", type=unit_interval, nargs="+", default=[0.5, 0.95])
    sp.add_argument("--conf", type=unit_interval)
    sp.add_argument("--coco", action="store_true", help="also report mAP over IoU 0.50:0.05:0.95")
    out(sp)
    sp = add(esub, "region", cmd_eval_region, "Micro IoU of anatomical region detections.")
    sp.add_argument("--pred", required=True, help="detection records")
    sp.add_argument("--ref", required=True, help="scene_graph records")
    out(sp)
    sp = add(esub, "expert", cmd_eval_expert, "Aggregate clinician scores.")
    sp.add_argument("--scores", required=True)
    sp.add_argument("--rubric-map", help="JSON/YAML grade -> number mapping")
    out(sp)

    sp = add(sub, "simulate", cmd_simulate, "Synthetic scene graphs, detections and pipeline metrics.")
    sp.add_argument("--images", type=positive_int, default=200)
    sp.add_argument("--seed", type=non_negative_int)
    sp.add_argument("--noise", help="noise_config document")
    sp.add_argument("--box-jitter", type=non_negative_float)
    sp.add_argument("--region-drop", type=unit_interval)
    sp.add_argument("--lesion-drop", type=unit_interval)
    sp.add_argument("--false-positive-rate", type=non_negative_float)
    sp.add_argument("--confidence-noise", type=non_negative_float)
    sp.add_argument("--p-negative", type=unit_interval, default=0.3)
    sp.add_argument("--max-sites", type=positive_int, default=4)
    sp.add_argument("--max-labels", type=positive_int, default=3)
    sp.add_argument("--out", required=True, help="output directory")

    sp = add(sub, "ingest", cmd_ingest, "Filter scene graphs: findings required, negatives subsampled.")
    sp.add_argument("--scene-graphs", nargs="+", required=True)
    sp.add_argument("--keep-fraction", type=unit_interval, help="fraction of negatives kept (default 0.12)")
    sp.add_argument("--seed", type=non_negative_int)
    sp.add_argument("--split-file", help="split_entry records mapping image ids to splits")
    sp.add_argument("--allow-missing-findings", action="store_true")
    out(sp)

    sp = add(sub, "replay", cmd_replay, "Re-run a recorded command and verify its output digests.")
    sp.add_argument("manifest")
    sp.add_argument("--check", action="store_true", help="only verify current outputs, do not re-run")
    return p


def _execute(argv: Sequence[str], settings: dict | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv))
    except UsageError as e:
        print(e, file=sys.stderr)
        return 2
    except SystemExit as e:  # --help / --version
        return int(e.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        resolved = json.loads(json.dumps(settings)) if settings is not None else load_settings(args.config)
        return args.func(Run(argv, resolved, args))
    except (ParpError, OSError) as e:
        print(f"parp: error: {e}", file=sys.stderr)
        return 1


def main(argv: Sequence[str] | None = None) -> int:
    return _execute(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
