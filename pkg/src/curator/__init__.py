"""Context-aware data curation: contextual-diversity acquisition, co-occurrence
fairness repair, and hard-class recommendation for active domain adaptation."""

from .errors import CuratorError
from .records import LabelRecord, PredictionRecord, Region, parse_labels, parse_predictions, write_predictions
from .signature import ContextSignature, DistanceMatrix, build_signature, contextual_distance, distance_matrix

__version__ = "0.1.0"

__all__ = [
    "CuratorError",
    "ContextSignature",
    "DistanceMatrix",
    "LabelRecord",
    "PredictionRecord",
    "Region",
    "build_signature",
    "contextual_distance",
    "distance_matrix",
    "parse_labels",
    "parse_predictions",
    "write_predictions",
]
