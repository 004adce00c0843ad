"""Model training entry points shared by the CLI and the federation clients."""

from __future__ import annotations

from .ingest import RoundPlan, parse_descriptor
from .model import ModelSpec, MovementModel, aggregate


def train_model(spec: ModelSpec, records, base: MovementModel | None = None):
    """Train on records of the spec's ship type, in timestamp order.

    Records of other ship types are ignored. When `base` is given, training
    continues on that model instead of starting empty.
    """
    model = base if base is not None else MovementModel.empty(spec)
    batch = [r for r in records if r.ship_type == spec.ship_type]
    batch.sort(key=lambda r: r.timestamp)
    for rec in batch:
        model.update(rec.state_vector())
    return model


def train_per_rounds(spec: ModelSpec, records, plan: RoundPlan) -> MovementModel:
    """Centralized reference for federated training with a single client.

    Each round trains a fresh model on that round's chunk only, then folds it
    into the running global model, exactly mirroring the server recurrence.
    """
    global_model = MovementModel.empty(spec)
    for t in range(1, plan.n_rounds + 1):
        first, last = parse_descriptor(plan.descriptor(t))
        chunk = [r for r in records if first <= r.utc_date() <= last]
        local = train_model(spec, chunk)
        global_model = aggregate([global_model, local])
    return global_model
