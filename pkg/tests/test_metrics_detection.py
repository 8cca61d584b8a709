import warnings

import numpy as np
import pytest

from parp.core import BBoxXYXY, DetectionSet, RegionDetection, RegionEntry, SceneGraph, ScoredBox, ValidationError
from parp.metrics import DetectionEvalInput, GroundTruthBox, detection_eval, region_eval
from parp.metrics.detection import average_precision

from oracles import ap_oracle, match_oracle


def B(*v):
    return BBoxXYXY(*v)


def pred(box, obj, conf):
    return ScoredBox(box, obj, tuple(conf))


def test_perfect():
    gt = (GroundTruthBox(B(0, 0, 10, 10), frozenset({0, 1})), GroundTruthBox(B(20, 20, 40, 40), frozenset({2})))
    preds = (pred(B(0, 0, 10, 10), 1.0, [1, 1, 0]), pred(B(20, 20, 40, 40), 1.0, [0, 0, 1]))
    r = detection_eval([DetectionEvalInput("a", gt, preds)], 3)
    assert r["map"] == {"0.5": 1.0, "0.95": 1.0}
    assert r["mean_precision"] == 1.0 and r["mean_recall"] == 1.0


def test_iou_06_threshold_dependence():
    gt = (GroundTruthBox(B(0, 0, 10, 10), frozenset({0})),)
    preds = (pred(B(0, 0, 6, 10), 1.0, [1.0]),)
    r = detection_eval([DetectionEvalInput("a", gt, preds)], 1)
    assert r["per_class"]["0"]["ap@0.5"] == 1.0
    assert r["per_class"]["0"]["ap@0.95"] == 0.0


def test_class_without_gt_excluded():
    gt = (GroundTruthBox(B(0, 0, 10, 10), frozenset({0})),)
    preds = (pred(B(0, 0, 10, 10), 1.0, [1.0, 0.9]),)
    with pytest.warns(UserWarning, match="no ground truth"):
        r = detection_eval([DetectionEvalInput("a", gt, preds)], 2)
    assert r["n_classes_evaluated"] == 1


def test_validation():
    with pytest.raises(ValidationError):
        detection_eval([], 1, iou_thresholds=(1.5,))
    with pytest.raises(ValidationError):
        detection_eval([DetectionEvalInput("a", (), (pred(B(0, 0, 1, 1), 1, [1, 1]),))], 3)


def test_known_counts():
    # class 0: 3 GT, ranked predictions TP, FP, TP -> AP = 1/3*1 + 1/3*(2/3)
    gt = tuple(GroundTruthBox(B(30 * k, 0, 30 * k + 10, 10), frozenset({0})) for k in range(3))
    preds = (
        pred(B(0, 0, 10, 10), 0.9, [1.0]),
        pred(B(200, 200, 210, 210), 0.8, [1.0]),
        pred(B(30, 0, 40, 10), 0.7, [1.0]),
    )
    r = detection_eval([DetectionEvalInput("a", gt, preds)], 1)
    assert r["per_class"]["0"]["ap@0.5"] == pytest.approx(1 / 3 + 2 / 9, abs=1e-12)
    assert r["per_class"]["0"]["precision"] == pytest.approx(2 / 3)
    assert r["per_class"]["0"]["recall"] == pytest.approx(2 / 3)


def random_instance(rng, n_images, n_classes):
    images, inputs = [], []
    for i in range(n_images):
        gts, preds = [], []
        for _ in range(rng.integers(0, 4)):
            x, y = rng.integers(0, 40, 2)
            box = (float(x), float(y), float(x + rng.integers(4, 20)), float(y + rng.integers(4, 20)))
            classes = frozenset(int(c) for c in rng.choice(n_classes, rng.integers(1, n_classes + 1), replace=False))
            gts.append((box, classes))
        for _ in range(rng.integers(0, 5)):
            if gts and rng.random() < 0.6:
                b = gts[rng.integers(len(gts))][0]
                d = rng.integers(-3, 4, 4)
                box = (max(0.0, b[0] + d[0]), max(0.0, b[1] + d[1]), b[2] + abs(d[2]) + 1, b[3] + abs(d[3]) + 1)
            else:
                x, y = rng.integers(0, 40, 2)
                box = (float(x), float(y), float(x + rng.integers(4, 20)), float(y + rng.integers(4, 20)))
            conf = [float(v) for v in rng.choice([0.0, 0.3, 0.6, 1.0], n_classes)]
            preds.append((box, float(rng.choice([0.5, 0.8, 1.0])), conf))
        images.append((gts, preds))
        inputs.append(
            DetectionEvalInput(
                str(i),
                tuple(GroundTruthBox(B(*b), c) for b, c in gts),
                tuple(pred(B(*b), o, c) for b, o, c in preds),
            )
        )
    return images, inputs


@pytest.mark.parametrize("seed", range(40))
def test_against_pr_oracle(seed):
    rng = np.random.default_rng(seed)
    n_classes = int(rng.integers(1, 5))
    images, inputs = random_instance(rng, int(rng.integers(1, 6)), n_classes)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        r = detection_eval(inputs, n_classes, (0.5, 0.75), 0.35)
    for c in range(n_classes):
        scores, flags, n_gt = match_oracle(images, c, 0.5)
        if n_gt == 0:
            assert str(c) not in r["per_class"]
            continue
        row = r["per_class"][str(c)]
        assert row["ap@0.5"] == pytest.approx(ap_oracle(flags, n_gt), abs=1e-6)
        kept = [f for s, f in zip(scores, flags) if s >= 0.35]
        assert row["precision"] == pytest.approx(sum(kept) / len(kept) if kept else 0.0, abs=1e-6)
        assert row["recall"] == pytest.approx(sum(kept) / n_gt, abs=1e-6)
        _, flags75, _ = match_oracle(images, c, 0.75)
        assert row["ap@0.75"] == pytest.approx(ap_oracle(flags75, n_gt), abs=1e-6)


def test_ap_edge_cases():
    assert np.isnan(average_precision(np.array([], dtype=bool), 0))
    assert average_precision(np.array([], dtype=bool), 3) == 0.0


def test_coco_sweep():
    gt = (GroundTruthBox(B(0, 0, 10, 10), frozenset({0})),)
    preds = (pred(B(0, 0, 10, 9), 1.0, [1.0]),)  # IoU 0.9
    r = detection_eval([DetectionEvalInput("a", gt, preds)], 1, coco_sweep=True)
    assert r["map_coco"] == pytest.approx(0.9)


def _sg(image_id, boxes):
    return SceneGraph(image_id, tuple(RegionEntry(k, b, frozenset()) for k, b in boxes))


def test_region_identity():
    sg = _sg("a", [(1, B(0, 0, 10, 10)), (2, B(10, 10, 20, 20))])
    det = DetectionSet("a", (RegionDetection(1, B(0, 0, 10, 10), 1), RegionDetection(2, B(10, 10, 20, 20), 1)), ())
    r = region_eval([sg], [det])
    assert r["average_iou"] == 1.0 and r["detected_regions_per_image"] == 2.0


def test_region_half_overlap():
    sg = _sg("a", [(1, B(0, 0, 10, 10))])
    det = DetectionSet("a", (RegionDetection(1, B(5, 0, 15, 10), 1),), ())
    assert region_eval([sg], [det])["per_region"]["1"] == pytest.approx(1 / 3)


def test_region_missed_counts_union(vocab):
    sgs = [_sg("a", [(1, B(0, 0, 10, 10))]), _sg("b", [(1, B(0, 0, 10, 10))])]
    det = [DetectionSet("a", (RegionDetection(1, B(0, 0, 10, 10), 1),), ())]
    r = region_eval(sgs, det, vocab)
    assert r["per_region"][vocab.name(1)] == pytest.approx(0.5)
    assert r["detected_regions_per_image"] == 0.5
