"""Shared builders and comparators for the test suite."""

from __future__ import annotations

import numpy as np

from fedmove.model import Cell, GridConfig, ModelSpec, MovementModel, Prototype


def make_spec(origin_lon=0.0, origin_lat=0.0, cell_size=0.01, **kw) -> ModelSpec:
    grid = GridConfig(origin_lon=origin_lon, origin_lat=origin_lat,
                      cell_size=cell_size)
    return ModelSpec(grid=grid, **kw)


def batch_prototype(xs) -> Prototype:
    """Prototype built directly from batch moments (the exact reference)."""
    xs = np.asarray(xs, dtype=float)
    mean = xs.mean(axis=0)
    centered = xs - mean
    return Prototype(mean=mean.copy(), m2=centered.T @ centered, count=len(xs))


def pooled_moments(xs):
    """Population mean and covariance of a batch, computed in one pass."""
    xs = np.asarray(xs, dtype=float)
    mean = xs.mean(axis=0)
    centered = xs - mean
    return mean, (centered.T @ centered) / len(xs)


def random_prototype(rng, max_count: int = 1000) -> Prototype:
    count = int(rng.integers(1, max_count + 1))
    mean = np.array([
        rng.uniform(-20.0, 20.0),
        rng.uniform(-20.0, 20.0),
        rng.uniform(0.0, 30.0),
        rng.uniform(0.0, 360.0),
    ])
    a = rng.normal(size=(4, 4))
    cov = a @ a.T + 0.1 * np.eye(4)
    cov = (cov + cov.T) / 2.0
    return Prototype(mean=mean, m2=cov * count, count=count)


def random_model(rng, spec: ModelSpec | None = None,
                 max_cells: int = 6) -> MovementModel:
    if spec is None:
        spec = make_spec()
    model = MovementModel.empty(spec)
    n_cells = int(rng.integers(1, max_cells + 1))
    keys = set()
    while len(keys) < n_cells:
        keys.add((int(rng.integers(-500, 500)), int(rng.integers(-500, 500))))
    for key in keys:
        protos = [random_prototype(rng) for _ in range(int(rng.integers(1, 5)))]
        model.cells[key] = Cell(index=key, prototypes=protos)
    model.trained_records = sum(
        p.count for c in model.cells.values() for p in c.prototypes
    )
    return model


def models_equal(a: MovementModel, b: MovementModel) -> bool:
    """Bitwise model equality: spec, cells, counts, means, second moments."""
    if a.spec != b.spec or a.trained_records != b.trained_records:
        return False
    if set(a.cells) != set(b.cells):
        return False
    for key, cell in a.cells.items():
        other = b.cells[key]
        if len(cell.prototypes) != len(other.prototypes):
            return False
        for p, q in zip(cell.prototypes, other.prototypes):
            if p.count != q.count:
                return False
            if not np.array_equal(p.mean, q.mean):
                return False
            if not np.array_equal(p.m2, q.m2):
                return False
    return True
