"""Evaluation metrics: text similarity, clinical efficacy, detection and expert scores."""

from .clinical import CEResult, ce_metrics
from .detection import DetectionEvalInput, GroundTruthBox, detection_eval, region_eval
from .expert import ExpertScore, aggregate_expert_scores
from .nlg import Corpus, bleu_n, meteor_variant, rouge_l, tokenize
