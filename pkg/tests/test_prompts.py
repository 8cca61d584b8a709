import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from parp.core import NEG_TOKEN, BBoxXYXY, RegionDetection, RegionEntry, SceneGraph, ScoredBox, ValidationError
from parp.prompts import (
    SEP_TOKEN,
    TEXT_PROMPT_HEADER,
    RegionalPrompt,
    assign_lesions_to_regions,
    build_inference_prompt,
    build_text_prompt_ablation,
    build_training_prompt,
    parse_training_sample,
    select_region_token,
    serialize_training_sample,
    text_prompt_from_findings,
)

from oracles import HIERARCHY, rule_oracle, token_of

BRANCHES = {
    "atelectasis": ["lung opacity", "atelectasis", "linear/patchy atelectasis", "lobar/segmental collapse"],
    "vascular": ["lung opacity", "vascular congestion", "vascular redistribution"],
    "effusion": ["lung opacity", "pleural effusion", "costophrenic angle blunting"],
    "lesion": ["lung opacity", "lung lesion", "mass/nodule"],
    "independent": [n for n, (lv, _) in HIERARCHY.items() if lv == "independent"],
    "seconds": [n for n, (lv, _) in HIERARCHY.items() if lv in ("root", "second")],
}


def freqs(taxonomy):
    return {n: taxonomy.frequency(taxonomy.index(n)) for n in taxonomy.names}


def idx(taxonomy, names):
    return {taxonomy.index(n) for n in names}


def test_rule_examples(taxonomy):
    assert select_region_token(idx(taxonomy, ["pleural effusion"]), taxonomy) == "pleural_effusion"
    chain = ["lung opacity", "atelectasis", "linear/patchy atelectasis"]
    assert select_region_token(idx(taxonomy, chain), taxonomy) == "atelectasis"
    f = {taxonomy.index("pneumothorax"): 0.0082, taxonomy.index("hyperaeration"): 0.0059}
    assert select_region_token(idx(taxonomy, ["pneumothorax", "hyperaeration"]), taxonomy, f) == "hyperaeration"
    assert select_region_token(set(), taxonomy) == NEG_TOKEN
    assert select_region_token(idx(taxonomy, ["lung opacity", "pleural effusion"]), taxonomy) == "pleural_effusion"


@pytest.mark.parametrize("branch", sorted(BRANCHES))
def test_rule_table_exhaustive(taxonomy, branch):
    f = freqs(taxonomy)
    names = BRANCHES[branch]
    for k in range(0, 4):
        for combo in itertools.combinations(names, k):
            assert select_region_token(idx(taxonomy, combo), taxonomy) == rule_oracle(combo, f), combo


@given(st.sets(st.sampled_from(list(HIERARCHY)), max_size=8))
def test_rule_random(taxonomy, names):
    assert select_region_token(idx(taxonomy, names), taxonomy) == rule_oracle(names, freqs(taxonomy))


def test_rule_unknown_class(taxonomy):
    with pytest.raises(ValidationError):
        select_region_token({99}, taxonomy)


def _sg(entries):
    return SceneGraph("x", tuple(RegionEntry(k, BBoxXYXY(0, 0, 10, 10), frozenset(v)) for k, v in entries))


def test_training_prompt_examples(taxonomy, vocab):
    assert build_training_prompt(_sg([(k, ()) for k in range(1, 30)]), taxonomy) == RegionalPrompt.negative()
    k = vocab.index("left lung")
    p = build_training_prompt(_sg([(k, idx(taxonomy, ["pleural effusion"]))]), taxonomy)
    assert p.slot(k) == "pleural_effusion"
    assert [t for i, t in enumerate(p.tokens, 1) if i != k] == [NEG_TOKEN] * 28


@given(st.lists(st.tuples(st.integers(1, 29), st.sets(st.sampled_from(list(HIERARCHY)), max_size=4)),
                unique_by=lambda t: t[0], max_size=29))
def test_training_prompt_random(taxonomy, entries):
    p = build_training_prompt(_sg([(k, idx(taxonomy, v)) for k, v in entries]), taxonomy)
    want = ["[NEG]"] * 29
    for k, v in entries:
        want[k - 1] = rule_oracle(v, freqs(taxonomy))
    assert list(p.tokens) == want
    assert len(p.rendered.split()) == 29
    p.check_vocabulary(taxonomy)


def _lesion(box, *active, n=21):
    conf = [0.0] * n
    for j in active:
        conf[j] = 1.0
    return ScoredBox(box, 1.0, tuple(conf))


def test_assignment_threshold():
    a = RegionDetection(1, BBoxXYXY(0, 0, 10, 10), 1.0)
    b = RegionDetection(2, BBoxXYXY(0, 0, 10, 10), 1.0)
    # IoU 0.6 with A; construct B so the same box has IoU 0.3
    lesion = _lesion(BBoxXYXY(0, 0, 6, 10), 9)
    b = RegionDetection(2, BBoxXYXY(0, 0, 20, 10), 1.0)
    asg = assign_lesions_to_regions([a, b], [lesion], 0.4)
    assert asg.assigned_regions == [1]
    assert asg.get(1)[1] == pytest.approx(0.6)
    assert asg.get(2) is None


def test_assignment_argmax():
    a = RegionDetection(1, BBoxXYXY(0, 0, 10, 10), 1.0)
    low, high = _lesion(BBoxXYXY(0, 0, 5, 10), 1), _lesion(BBoxXYXY(0, 0, 7, 10), 2)
    asg = assign_lesions_to_regions([a], [low, high], 0.4)
    assert asg.get(1)[0] is high and asg.get(1)[1] == pytest.approx(0.7)
    assert assign_lesions_to_regions([a], [], 0.4).assigned_regions == []


@given(st.lists(st.tuples(st.integers(0, 30), st.integers(0, 30), st.integers(1, 20), st.integers(1, 20)), min_size=1, max_size=6),
       st.floats(0, 1), st.floats(0, 1))
def test_assignment_anti_monotone(rects, t1, t2):
    lo, hi = sorted((t1, t2))
    boxes = [BBoxXYXY(x, y, x + w, y + h) for x, y, w, h in rects]
    regions = [RegionDetection(k + 1, b, 1.0) for k, b in enumerate(boxes[:3])]
    lesions = [_lesion(b, 1) for b in boxes[3:]] or [_lesion(boxes[0], 1)]
    a_lo = set(assign_lesions_to_regions(regions, lesions, lo).assigned_regions)
    a_hi = set(assign_lesions_to_regions(regions, lesions, hi).assigned_regions)
    assert a_hi <= a_lo


def test_inference_prompt(taxonomy):
    asg = assign_lesions_to_regions([], [], 0.4)
    assert build_inference_prompt(asg, taxonomy) == RegionalPrompt.negative()
    r = RegionDetection(1, BBoxXYXY(0, 0, 10, 10), 1.0)
    lesion = _lesion(BBoxXYXY(0, 0, 10, 10), taxonomy.index("lung opacity"), taxonomy.index("pleural effusion"))
    p = build_inference_prompt(assign_lesions_to_regions([r], [lesion]), taxonomy)
    assert p.slot(1) == "pleural_effusion"


def test_serialize_examples():
    neg = RegionalPrompt.negative()
    s = serialize_training_sample(neg, "No acute process.")
    assert s == " ".join(["[NEG]"] * 29) + " <SEP> No acute process."
    assert serialize_training_sample(neg) == " ".join(["[NEG]"] * 29) + " <SEP>"
    assert parse_training_sample(serialize_training_sample(neg)) == (neg, "")


@given(st.lists(st.sampled_from([token_of(n) for n in HIERARCHY] + ["[NEG]"]), min_size=29, max_size=29),
       st.text(alphabet=st.sampled_from(list("ab \\<>SEP\n")), max_size=40))
def test_serialize_round_trip(tokens, report):
    p = RegionalPrompt(tuple(tokens))
    assert parse_training_sample(serialize_training_sample(p, report)) == (p, report)


def test_bad_prompts():
    with pytest.raises(ValidationError):
        RegionalPrompt(("[NEG]",) * 28)
    with pytest.raises(ValidationError):
        RegionalPrompt(("a b",) + ("[NEG]",) * 28)
    with pytest.raises(ValidationError):
        RegionalPrompt((SEP_TOKEN,) + ("[NEG]",) * 28)
    with pytest.raises(ValidationError):
        parse_training_sample("no separator here")


def test_text_prompt_examples():
    assert text_prompt_from_findings({}) == TEXT_PROMPT_HEADER
    assert text_prompt_from_findings({"pleural effusion": ["left lung"]}) == (
        TEXT_PROMPT_HEADER + "\n1. pleural effusion may be present in the left lung."
    )
    got = text_prompt_from_findings({"a": ["r1", "r2"], "b": ["r1", "r2"], "c": ["r3"]})
    assert got.split("\n")[1:] == ["1. a, b may be present in the r1, r2.", "2. c may be present in the r3."]


def test_text_prompt_ablation(taxonomy, vocab):
    regs = [RegionDetection(vocab.index("left lung"), BBoxXYXY(0, 0, 10, 10), 1.0),
            RegionDetection(vocab.index("right lung"), BBoxXYXY(50, 0, 60, 10), 1.0)]
    pe = taxonomy.index("pleural effusion")
    asg = assign_lesions_to_regions(regs, [_lesion(BBoxXYXY(0, 0, 10, 10), pe), _lesion(BBoxXYXY(50, 0, 60, 10), pe)])
    text = build_text_prompt_ablation(asg, vocab, taxonomy)
    assert text.endswith("1. pleural effusion may be present in the right lung, left lung.")
