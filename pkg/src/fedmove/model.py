"""Grid-based Gaussian mixture movement models.

Geographic space is divided into a regular lon/lat grid. Each cell holds a
small set of prototypes (mean motion state, co-deviation matrix, support
count) forming a Gaussian mixture that describes how vessels move through
that cell. Models train incrementally, one record at a time, and two models
can be combined cell by cell, which is what federated aggregation builds on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

SHIP_TYPES = ("cargo", "tanker", "passenger")

STATE_DIMS = 4
LON, LAT, SOG, COG = range(STATE_DIMS)
DIM_NAMES = ("lon", "lat", "sog", "cog")

DEFAULT_CELL_SIZE = 0.01
DEFAULT_MAX_PROTOTYPES = 8
DEFAULT_D_NEW = 1.0
# One distance unit per dimension: one grid cell, 2 knots, 30 degrees.
DEFAULT_SCALES = (DEFAULT_CELL_SIZE, DEFAULT_CELL_SIZE, 2.0, 30.0)


class ConfigMismatchError(ValueError):
    """Models with different grid or hyperparameter settings cannot mix."""


def wrap_degrees(delta: float) -> float:
    """Map an angular difference onto [-180, 180)."""
    return (delta + 180.0) % 360.0 - 180.0


def norm_course(course: float) -> float:
    """Normalize a course onto [0, 360)."""
    return course % 360.0


@dataclass(frozen=True)
class GridConfig:
    origin_lon: float = 0.0
    origin_lat: float = 0.0
    cell_size: float = DEFAULT_CELL_SIZE

    def __post_init__(self):
        if self.cell_size <= 0:
            raise ValueError("cell_size must be positive")

    def cell_index(self, lon: float, lat: float) -> tuple[int, int]:
        """Map a position to its (row, col) grid cell; row follows latitude."""
        row = math.floor((lat - self.origin_lat) / self.cell_size)
        col = math.floor((lon - self.origin_lon) / self.cell_size)
        return row, col

    def cell_center(self, row: int, col: int) -> tuple[float, float]:
        lon = self.origin_lon + (col + 0.5) * self.cell_size
        lat = self.origin_lat + (row + 0.5) * self.cell_size
        return lon, lat


@dataclass(frozen=True)
class ModelSpec:
    """Everything two models must share before they can be combined."""

    grid: GridConfig = field(default_factory=GridConfig)
    ship_type: str = "cargo"
    max_prototypes: int = DEFAULT_MAX_PROTOTYPES
    d_new: float = DEFAULT_D_NEW
    scales: tuple[float, float, float, float] = DEFAULT_SCALES

    def __post_init__(self):
        if self.ship_type not in SHIP_TYPES:
            raise ValueError(f"unknown ship type {self.ship_type!r}")
        if self.max_prototypes < 1:
            raise ValueError("max_prototypes must be >= 1")
        if self.d_new <= 0:
            raise ValueError("d_new must be positive")
        scales = tuple(float(s) for s in self.scales)
        if len(scales) != STATE_DIMS or any(s <= 0 for s in scales):
            raise ValueError("scales must be 4 positive values")
        object.__setattr__(self, "scales", scales)

    def scales_array(self) -> np.ndarray:
        return np.array(self.scales, dtype=float)


def state_delta(x, mean) -> np.ndarray:
    """Per-dimension difference x - mean with the course delta wrapped."""
    d = np.asarray(x, dtype=float) - mean
    d[COG] = wrap_degrees(d[COG])
    return d


def state_distance(x, mean, scales) -> float:
    """Euclidean distance over scale-normalized deltas (wrapped course)."""
    d = state_delta(x, mean) / scales
    return float(math.sqrt(np.dot(d, d)))


@dataclass
class Prototype:
    """One mixture component: mean state, summed co-deviations, support."""

    mean: np.ndarray
    m2: np.ndarray
    count: int

    @classmethod
    def from_state(cls, x) -> "Prototype":
        mean = np.array(x, dtype=float)
        mean[COG] = norm_course(mean[COG])
        return cls(mean=mean, m2=np.zeros((STATE_DIMS, STATE_DIMS)), count=1)

    def covariance(self) -> np.ndarray:
        # Population convention: merging stays exact and count=1 gives S=0.
        return self.m2 / self.count

    def copy(self) -> "Prototype":
        return Prototype(self.mean.copy(), self.m2.copy(), self.count)

    def absorb(self, x) -> None:
        """Online single-record moment update (wrapped course mean)."""
        self.count += 1
        d1 = state_delta(x, self.mean)
        self.mean = self.mean + d1 / self.count
        self.mean[COG] = norm_course(self.mean[COG])
        d2 = state_delta(x, self.mean)
        # Symmetrized rank-1 term keeps m2 exactly symmetric in floats.
        self.m2 = self.m2 + 0.5 * (np.outer(d1, d2) + np.outer(d2, d1))


def merge_prototypes(a: Prototype, b: Prototype) -> Prototype:
    """Pool two prototypes so the result carries their combined moments."""
    n = a.count + b.count
    mean = (a.count * a.mean + b.count * b.mean) / n
    delta = b.mean - a.mean
    delta[COG] = wrap_degrees(delta[COG])
    mean[COG] = norm_course(a.mean[COG] + delta[COG] * (b.count / n))
    m2 = a.m2 + b.m2 + np.outer(delta, delta) * (a.count * b.count / n)
    return Prototype(mean=mean, m2=m2, count=n)


@dataclass
class Cell:
    index: tuple[int, int]
    prototypes: list[Prototype] = field(default_factory=list)

    def total_count(self) -> int:
        return sum(p.count for p in self.prototypes)

    def mixing_weights(self) -> np.ndarray:
        counts = np.array([p.count for p in self.prototypes], dtype=float)
        return counts / counts.sum()


def nearest_prototype(cell: Cell, x, scales):
    """Index and distance of the closest prototype, or None if the cell is empty.

    Ties go to the lowest index so repeated runs pick the same prototype.
    """
    best = None
    for i, proto in enumerate(cell.prototypes):
        d = state_distance(x, proto.mean, scales)
        if best is None or d < best[1]:
            best = (i, d)
    return best


def shrink_to_capacity(prototypes: list[Prototype], limit: int, scales) -> None:
    """Merge closest pairs in place until at most `limit` prototypes remain."""
    while len(prototypes) > limit:
        best = None
        for i in range(len(prototypes)):
            for j in range(i + 1, len(prototypes)):
                d = state_distance(prototypes[i].mean, prototypes[j].mean, scales)
                if best is None or d < best[0]:
                    best = (d, i, j)
        _, i, j = best
        prototypes[i] = merge_prototypes(prototypes[i], prototypes[j])
        del prototypes[j]


@dataclass
class MovementModel:
    spec: ModelSpec
    cells: dict[tuple[int, int], Cell] = field(default_factory=dict)
    trained_records: int = 0

    @classmethod
    def empty(cls, spec: ModelSpec) -> "MovementModel":
        return cls(spec=spec)

    def prototype_count(self) -> int:
        return sum(len(c.prototypes) for c in self.cells.values())

    def update(self, x) -> None:
        """Absorb one motion state into the grid."""
        x = np.asarray(x, dtype=float)
        key = self.spec.grid.cell_index(x[LON], x[LAT])
        cell = self.cells.get(key)
        if cell is None:
            cell = Cell(index=key)
            self.cells[key] = cell
        hit = nearest_prototype(cell, x, self.spec.scales)
        if hit is not None and hit[1] < self.spec.d_new:
            cell.prototypes[hit[0]].absorb(x)
        else:
            cell.prototypes.append(Prototype.from_state(x))
            if len(cell.prototypes) > self.spec.max_prototypes:
                shrink_to_capacity(
                    cell.prototypes, self.spec.max_prototypes, self.spec.scales
                )
        self.trained_records += 1


def same_config(a: ModelSpec, b: ModelSpec) -> bool:
    return a == b


def aggregate(models: list[MovementModel]) -> MovementModel:
    """Combine models cell by cell, merging closest prototypes over capacity.

    Inputs are left untouched; the result gets copies of every prototype.
    A single input reproduces itself and an empty model is the identity.
    """
    if not models:
        raise ValueError("aggregate needs at least one model")
    spec = models[0].spec
    for m in models[1:]:
        if not same_config(m.spec, spec):
            raise ConfigMismatchError(
                "cannot aggregate models with different configurations"
            )
    out = MovementModel.empty(spec)
    keys = set()
    for m in models:
        keys.update(m.cells.keys())
    for key in sorted(keys):
        merged: list[Prototype] = []
        for m in models:
            cell = m.cells.get(key)
            if cell is not None:
                merged.extend(p.copy() for p in cell.prototypes)
        shrink_to_capacity(merged, spec.max_prototypes, spec.scales)
        out.cells[key] = Cell(index=key, prototypes=merged)
    out.trained_records = sum(m.trained_records for m in models)
    return out
