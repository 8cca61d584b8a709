import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from parp.core import BBoxXYXY, ScoredBox, ValidationError
from parp.geometry import iou, iou_matrix, nms_multilabel, threshold_classes

from oracles import iou_oracle, nms_oracle


def B(*v):
    return BBoxXYXY(*v)


def test_iou_examples():
    assert iou(B(0, 0, 10, 10), B(0, 0, 10, 10)) == 1.0
    assert iou(B(0, 0, 10, 10), B(20, 20, 30, 30)) == 0.0
    assert iou(B(0, 0, 10, 10), B(5, 0, 15, 10)) == pytest.approx(1 / 3, abs=1e-6)


boxes = st.tuples(st.floats(0, 100), st.floats(0, 100), st.floats(0.5, 50), st.floats(0.5, 50)).map(
    lambda t: BBoxXYXY(t[0], t[1], t[0] + t[2], t[1] + t[3])
)


@given(boxes, boxes)
def test_iou_properties(a, b):
    v = iou(a, b)
    assert 0 <= v <= 1
    assert v == pytest.approx(iou(b, a), abs=1e-12)
    assert v == pytest.approx(iou_oracle(a.as_tuple(), b.as_tuple()), abs=1e-12)
    assert iou(a, a) == pytest.approx(1.0)


def test_iou_matrix_matches_pairwise():
    rng = np.random.default_rng(0)
    bs = [B(x, y, x + w, y + h) for x, y, w, h in rng.uniform(1, 50, (12, 4))]
    m = iou_matrix(bs[:5], bs[5:])
    for i in range(5):
        for j in range(7):
            assert m[i, j] == pytest.approx(iou(bs[i], bs[5 + j]), abs=1e-12)
    assert iou_matrix([], bs).shape == (0, 12)


def sb(box, obj, *conf):
    return ScoredBox(box, obj, tuple(conf))


def test_nms_examples():
    a, b = sb(B(0, 0, 10, 10), 0.9, 1.0), sb(B(0, 0, 10, 10), 0.8, 1.0)
    assert [k.objectness for k in nms_multilabel([a, b])] == [0.9]
    c = sb(B(50, 50, 60, 60), 0.8, 1.0)
    assert len(nms_multilabel([a, c])) == 2
    d = sb(B(5, 0, 15, 10), 0.8, 1.0)
    assert len(nms_multilabel([a, d])) == 2


def test_nms_drops_low_scores_and_zeroes_classes():
    box = sb(B(0, 0, 10, 10), 0.5, 0.9, 0.5)
    out = nms_multilabel([box, sb(B(50, 50, 60, 60), 0.5, 0.6, 0.0)], conf_threshold=0.35)
    assert len(out) == 1
    assert out[0].class_conf == (0.9, 0.0)
    assert threshold_classes(box, 0.2).class_conf == (0.9, 0.5)


def test_nms_threshold_range():
    with pytest.raises(ValidationError):
        nms_multilabel([], conf_threshold=1.2)


@pytest.mark.parametrize("seed", range(50))
def test_nms_matches_oracle(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(0, 9))
    bs = [sb(B(x, y, x + w, y + h), float(o), float(c)) for x, y, w, h, o, c in zip(
        rng.integers(0, 20, n), rng.integers(0, 20, n), rng.integers(1, 15, n), rng.integers(1, 15, n),
        rng.choice([0.4, 0.6, 0.8, 1.0], n), rng.choice([0.5, 0.9, 1.0], n))]
    got = nms_multilabel(bs, 0.35, 0.45)
    want = nms_oracle([b.bbox.as_tuple() for b in bs], [b.score for b in bs], 0.35, 0.45)
    assert [(g.bbox, g.objectness) for g in got] == [(bs[i].bbox, bs[i].objectness) for i in want]
