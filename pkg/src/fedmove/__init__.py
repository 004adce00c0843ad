"""Federated movement models for AIS vessel traffic.

Grid-indexed Gaussian mixtures trained where the data lives: each receiving
station fits prototypes from its own traffic and ships only the model
parameters to an aggregation server, never the raw positions. The merged
global model scores new reports with chi-squared tail probabilities and
splits anomalies into position, speed, and direction verdicts.
"""

from .codec import CodecError, deserialize, read_model, serialize, write_model
from .detect import DetectionThresholds, Scorer, classify, detect_batch
from .events import event_stats, group_events
from .ingest import parse_ais_csv
from .model import GridConfig, ModelSpec, MovementModel, Prototype, aggregate
from .training import train_model, train_per_rounds

__version__ = "0.1.0"

__all__ = [
    "CodecError",
    "DetectionThresholds",
    "GridConfig",
    "ModelSpec",
    "MovementModel",
    "Prototype",
    "Scorer",
    "aggregate",
    "classify",
    "deserialize",
    "detect_batch",
    "event_stats",
    "group_events",
    "parse_ais_csv",
    "read_model",
    "serialize",
    "train_model",
    "train_per_rounds",
    "write_model",
    "__version__",
]
