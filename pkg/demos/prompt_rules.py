"""
Regional prompts from lesion label sets
=======================================

How a region's lesion labels collapse to one token, and how a scene graph
becomes a 29-token prompt prefixed to its report.
"""

from parp import LesionTaxonomy, RegionVocabulary
from parp.core import BBoxXYXY, RegionEntry, SceneGraph
from parp.prompts import build_training_prompt, select_region_token, serialize_training_sample

tax = LesionTaxonomy.default()
vocab = RegionVocabulary.default()


def token(*names, freqs=None):
    return select_region_token({tax.index(n) for n in names}, tax, freqs)


# a single class keeps its own token
print(token("pleural effusion"))

# the root gives way to a second-level class
print(token("lung opacity", "pleural effusion"))

# a third-level class speaks for its parent
print(token("lung opacity", "atelectasis", "linear/patchy atelectasis"))

# unrelated classes: the rarer one wins
rare = {tax.index("pneumothorax"): 0.0082, tax.index("hyperaeration"): 0.0059}
print(token("pneumothorax", "hyperaeration", freqs=rare))

sg = SceneGraph(
    "demo",
    (
        RegionEntry(vocab.index("left lung"), BBoxXYXY(260, 60, 470, 430), frozenset({tax.index("pleural effusion")})),
        RegionEntry(vocab.index("right lung"), BBoxXYXY(40, 60, 250, 430), frozenset()),
    ),
)
prompt = build_training_prompt(sg, tax)
for k, t in enumerate(prompt.tokens, start=1):
    if t != "[NEG]":
        print(f"slot {k:2d} ({vocab.name(k)}): {t}")

print(serialize_training_sample(prompt, "Small left pleural effusion."))
