import pytest
from hypothesis import given
from hypothesis import strategies as st

from parp.core import ValidationError
from parp.taxonomy import (
    RawLabelStats,
    classify_level,
    filter_tail_classes,
    hierarchy_closure,
    reduction_report,
    remove_root_redundancy,
)

from oracles import HIERARCHY


def test_tail_both_kept():
    assert filter_tail_classes(RawLabelStats({"A": 990, "B": 10}), 0.005) == {"A", "B"}


def test_tail_rare_dropped():
    assert filter_tail_classes(RawLabelStats({"A": 996, "B": 4}), 0.005) == {"A"}


def test_tail_boundary_is_inclusive():
    # 5/1000 is exactly the threshold
    assert filter_tail_classes(RawLabelStats({"A": 995, "B": 5}), 0.005) == {"A", "B"}


def test_empty_corpus():
    with pytest.raises(ValidationError):
        filter_tail_classes(RawLabelStats({}))
    with pytest.raises(ValidationError):
        RawLabelStats({"A": -1})


@given(st.dictionaries(st.text("abcdef", min_size=1, max_size=3), st.integers(0, 10_000), min_size=1))
def test_tail_matches_integer_oracle(counts):
    stats = RawLabelStats(counts)
    if stats.total == 0:
        return
    # n / total >= 5/1000  <=>  1000 n >= 5 total
    expected = {k for k, n in counts.items() if 1000 * n >= 5 * stats.total}
    assert filter_tail_classes(stats) == expected


def test_root_redundancy(taxonomy):
    idx = taxonomy.index
    got = remove_root_redundancy({idx("lung opacity"), idx("atelectasis"), idx("linear/patchy atelectasis")}, taxonomy)
    assert got == {idx("atelectasis"), idx("linear/patchy atelectasis")}
    same = {idx("lung opacity"), idx("pleural effusion")}
    assert remove_root_redundancy(same, taxonomy) == same
    assert remove_root_redundancy({idx("pneumothorax")}, taxonomy) == {idx("pneumothorax")}


@given(st.sets(st.integers(0, 20)))
def test_root_redundancy_property(taxonomy, labels):
    out = remove_root_redundancy(labels, taxonomy)
    has_third = any(HIERARCHY[taxonomy.name(j)][0] == "third" for j in labels)
    assert out == (set(labels) - {0} if has_third else set(labels))


def test_levels(taxonomy):
    assert classify_level(taxonomy.index("lung opacity"), taxonomy) == "root"
    assert classify_level(taxonomy.index("pleural effusion"), taxonomy) == "second"
    assert classify_level(taxonomy.index("pneumothorax"), taxonomy) == "independent"
    for name, (level, parent) in HIERARCHY.items():
        j = taxonomy.index(name)
        assert taxonomy.level(j) == level
        assert (taxonomy.name(taxonomy.parent(j)) if taxonomy.parent(j) is not None else None) == parent


def test_closure(taxonomy):
    idx = taxonomy.index
    assert hierarchy_closure({idx("mass/nodule")}, taxonomy) == {idx("mass/nodule"), idx("lung lesion"), idx("lung opacity")}
    assert hierarchy_closure({idx("pneumothorax")}, taxonomy) == {idx("pneumothorax")}


def test_reduction_report(taxonomy):
    counts = {n: 100 for n in taxonomy.names}
    counts["rare thing"] = 1
    rep = reduction_report(RawLabelStats(counts), 0.005, taxonomy)
    assert rep["n_retained"] == 21
    assert rep["retained_not_in_taxonomy"] == []
    assert rep["taxonomy_not_retained"] == []
