"""
Report and detection metrics
============================

Small worked examples for the text, clinical and detection scores.
"""

from parp.core import BBoxXYXY, ScoredBox
from parp.metrics import DetectionEvalInput, GroundTruthBox, ce_metrics, detection_eval
from parp.metrics.nlg import bleu_n, meteor_variant, rouge_l

pairs = (["the cat sat"], ["the cat sat on the mat"])
print("BLEU-1", round(bleu_n(pairs, 1), 4))  # all unigrams match, brevity penalty exp(1 - 6/3)
print("ROUGE-L", round(rouge_l((["a b c"], ["a x c"])), 4))
print("METEOR", round(meteor_variant((["small effusions noted"], ["small effusion noted"])), 4))

cand = [[1, 1, 0], [0, 1, 0]]
ref = [[1, 0, 0], [0, 1, 1]]
for mode in ("micro", "macro", "example"):
    r = ce_metrics(cand, ref, mode)
    print(f"CE {mode:7s} P={r.precision:.3f} R={r.recall:.3f} F1={r.f1:.3f}")

gt = (GroundTruthBox(BBoxXYXY(0, 0, 10, 10), frozenset({0})),)
pred = (ScoredBox(BBoxXYXY(0, 0, 6, 10), 1.0, (1.0,)),)  # IoU 0.6
rep = detection_eval([DetectionEvalInput("img", gt, pred)], 1)
print("AP@0.5", rep["map"]["0.5"], "AP@0.95", rep["map"]["0.95"])
