"""Pathology-aware regional prompt toolkit.

Non-neural pipeline pieces for anatomy-guided chest X-ray report
generation: lesion taxonomy reduction, label-squeeze detection losses,
lesion-to-region assignment, regional prompt construction, evaluation
metrics and a seeded synthetic scenario generator.
"""

__version__ = "0.1.0"

from .core import (
    NEG_TOKEN,
    BBoxXYWH,
    BBoxXYXY,
    DetectionSet,
    LesionTaxonomy,
    RegionDetection,
    RegionEntry,
    RegionVocabulary,
    SceneGraph,
    ScoredBox,
    ValidationError,
)
