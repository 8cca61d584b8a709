import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from parp.core import BBoxXYWH, ValidationError
from parp.losses import (
    LossWeights,
    MultiLabelBox,
    SingleLabelRow,
    box_loss,
    classification_loss,
    classification_loss_grad,
    detector_loss,
    label_squeeze,
    objectness_loss,
    squeeze_array,
    total_loss,
)

from oracles import bce_oracle, mse_oracle, squeeze_oracle


def test_squeeze_example():
    b1, b2 = BBoxXYWH(5, 5, 4, 4), BBoxXYWH(20, 20, 6, 6)
    out = label_squeeze([SingleLabelRow(3, b1), SingleLabelRow(7, b1), SingleLabelRow(3, b2)], 10)
    assert len(out) == 2
    assert out[0].bbox == b1 and out[0].active == (3, 7)
    assert out[1].bbox == b2 and out[1].active == (3,)


def test_squeeze_empty():
    assert label_squeeze([], 5) == []
    assert squeeze_array(np.zeros((0, 5)), 5).shape == (0, 9)


def test_squeeze_100_rows_5_boxes():
    rng = np.random.default_rng(0)
    boxes = [BBoxXYWH(10 * k + 5, 5, 4, 4) for k in range(5)]
    # distinct classes per box so every row sets a new bit
    pairs = [(b, c) for b in range(5) for c in range(20)]
    rows = [SingleLabelRow(c, boxes[b]) for b, c in (pairs[i] for i in rng.permutation(100))]
    out = label_squeeze(rows, 20)
    assert len(out) == 5
    assert sum(sum(m.classes) for m in out) == 100
    expected = squeeze_oracle([(r.cls, r.bbox.as_tuple()) for r in rows], 20)
    assert [(m.bbox.as_tuple(), list(m.active)) for m in out] == expected


def test_squeeze_tolerance():
    rows = [SingleLabelRow(0, BBoxXYWH(5, 5, 4, 4)), SingleLabelRow(1, BBoxXYWH(5.0001, 5, 4, 4))]
    assert len(label_squeeze(rows, 2)) == 2
    assert len(label_squeeze(rows, 2, tol=1e-3)) == 1


def test_squeeze_bad_class():
    with pytest.raises(ValidationError):
        label_squeeze([SingleLabelRow(5, BBoxXYWH(1, 1, 1, 1))], 5)
    with pytest.raises(ValidationError):
        MultiLabelBox((0, 0), BBoxXYWH(1, 1, 1, 1))


def test_squeeze_array_layout():
    arr = np.array([[1, 5, 5, 2, 2], [0, 5, 5, 2, 2]])
    out = squeeze_array(arr, 3)
    assert out.tolist() == [[1, 1, 0, 5, 5, 2, 2]]


def test_bce_examples():
    assert classification_loss([[1.0]], [[1 - 1e-7]]) == pytest.approx(0, abs=1e-6)
    assert classification_loss([[1, 0]], [[0.5, 0.5]]) == pytest.approx(2 * np.log(2), abs=1e-4)
    assert objectness_loss([1], [1 - 1e-7]) == pytest.approx(0, abs=1e-6)
    assert objectness_loss([0], [0.5]) == pytest.approx(0.6931, abs=1e-4)


def test_bce_random_instance():
    rng = np.random.default_rng(1)
    t = rng.integers(0, 2, (3, 4)).astype(float)
    p = rng.uniform(0, 1, (3, 4))
    assert classification_loss(t, p) == pytest.approx(bce_oracle(t.tolist(), p.tolist()), rel=1e-9)


def test_bce_shape_mismatch():
    with pytest.raises(ValidationError):
        classification_loss([[1, 0]], [[0.5]])


def test_box_loss_examples():
    b = [(0, 0, 1, 1)]
    assert box_loss(b, b) == 0
    assert box_loss([(0, 0, 1, 1)], [(1, 1, 1, 1)]) == pytest.approx(0.5)
    assert box_loss([], []) == 0.0
    assert box_loss([BBoxXYWH(1, 1, 1, 1)], [BBoxXYWH(1, 1, 1, 2)]) == pytest.approx(0.25)


def test_total_examples():
    assert total_loss(2, 1, 10).total == pytest.approx(2.5)
    assert total_loss(0, 0, 0).total == 0
    assert total_loss(3.0, 7.0, 9.0, LossWeights(1, 0, 0)).total == 3.0
    with pytest.raises(ValidationError):
        total_loss(-1, 0, 0)
    with pytest.raises(ValidationError):
        LossWeights(-0.1, 1, 1)


def test_gradient_matches_finite_difference():
    rng = np.random.default_rng(2)
    t = rng.integers(0, 2, (5, 6)).astype(float)
    p = rng.uniform(0.05, 0.95, (5, 6))
    g = classification_loss_grad(t, p)
    h = 1e-6
    for i in range(5):
        for j in range(6):
            up, dn = p.copy(), p.copy()
            up[i, j] += h
            dn[i, j] -= h
            fd = (classification_loss(t, up) - classification_loss(t, dn)) / (2 * h)
            assert fd == pytest.approx(g[i, j], rel=1e-4, abs=1e-6)


@given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_detector_loss_composition(m, c, seed):
    rng = np.random.default_rng(seed)
    ct, cp = rng.integers(0, 2, (m, c)), rng.uniform(0, 1, (m, c))
    ot, op = rng.integers(0, 2, m), rng.uniform(0, 1, m)
    bt, bp = rng.uniform(0, 100, (m, 4)), rng.uniform(0, 100, (m, 4))
    out = detector_loss(ct, cp, ot, op, bt, bp)
    lc = bce_oracle(ct.tolist(), cp.tolist())
    lo = bce_oracle(ot.tolist(), op.tolist())
    lb = mse_oracle(bt.tolist(), bp.tolist())
    assert out.cls == pytest.approx(lc, rel=1e-9)
    assert out.total == pytest.approx(0.5 * lc + 1.0 * lo + 0.05 * lb, rel=1e-9)
