"""Anomaly scoring against a frozen movement model.

A record is compared to the nearest prototype found in its grid cell or the
eight surrounding cells. Goodness of fit is a chi-squared test on the
Mahalanobis distance over the full 4-dimensional state; per-dimension
two-sided tests attribute the failure to position, speed or direction.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np

from .ingest import AisRecord
from .model import COG, LAT, LON, SOG, STATE_DIMS, MovementModel, wrap_degrees

# Regularizer for prototype covariances, in scale-normalized units.
COVARIANCE_EPSILON = 1e-6

NORMAL = "normal"
POSITION = "position"
SPEED = "speed"
DIRECTION = "direction"
VERDICTS = (NORMAL, POSITION, SPEED, DIRECTION)

# Which verdict each state dimension argues for.
DIM_GROUP = {LON: POSITION, LAT: POSITION, SOG: SPEED, COG: DIRECTION}

ANOMALY_COLUMNS = (
    "mmsi",
    "timestamp",
    "lon",
    "lat",
    "sog",
    "cog",
    "verdict",
    "p_value",
    "p_lon",
    "p_lat",
    "p_sog",
    "p_cog",
)


@dataclass(frozen=True)
class DetectionThresholds:
    pos: float = 0.01
    sog: float = 0.01
    cog: float = 0.01

    def __post_init__(self):
        for name, value in (("pos", self.pos), ("sog", self.sog), ("cog", self.cog)):
            if not 0 < value <= 1:
                raise ValueError(f"threshold {name} must be in (0, 1]")

    def for_dim(self, dim: int) -> float:
        return (self.pos, self.pos, self.sog, self.cog)[dim]

    @property
    def joint(self) -> float:
        return min(self.pos, self.sog, self.cog)


@dataclass
class ScoreReport:
    matched: bool
    prototype_ref: tuple | None = None
    mahalanobis_sq: float = 0.0
    p_value: float = 0.0
    per_dim_p: tuple = (0.0, 0.0, 0.0, 0.0)


@dataclass
class AnomalyRecord:
    record: AisRecord
    verdict: str
    report: ScoreReport

    @property
    def anomalous(self) -> bool:
        return self.verdict != NORMAL

    # Identity passthroughs so scored output feeds group_events directly.
    @property
    def mmsi(self) -> int:
        return self.record.mmsi

    @property
    def timestamp(self):
        return self.record.timestamp


def chi2_sf_4dof(x: float) -> float:
    """Chi-squared survival function with 4 degrees of freedom."""
    if x <= 0:
        return 1.0
    return math.exp(-x / 2.0) * (1.0 + x / 2.0)


def two_sided_p(z: float) -> float:
    """Two-sided tail probability of a standard normal deviation."""
    return math.erfc(abs(z) / math.sqrt(2.0))


class Scorer:
    """Precomputes per-prototype inverses so batch scoring stays cheap."""

    def __init__(self, model: MovementModel):
        self.model = model
        self.scales = model.spec.scales_array()
        self._scale_outer = np.outer(self.scales, self.scales)
        self._cells: dict[tuple[int, int], tuple] = {}
        self._hoods: dict[tuple[int, int], tuple | None] = {}

    def _cell_arrays(self, key):
        cached = self._cells.get(key)
        if cached is not None:
            return cached
        cell = self.model.cells[key]
        means = np.stack([p.mean for p in cell.prototypes])
        inverses = np.empty((len(cell.prototypes), STATE_DIMS, STATE_DIMS))
        deviations = np.empty((len(cell.prototypes), STATE_DIMS))
        for i, p in enumerate(cell.prototypes):
            normalized = p.covariance() / self._scale_outer
            inverses[i] = np.linalg.inv(
                normalized + COVARIANCE_EPSILON * np.eye(STATE_DIMS)
            )
            deviations[i] = np.sqrt(np.diag(normalized) + COVARIANCE_EPSILON)
        refs = [(key, i) for i in range(len(cell.prototypes))]
        arrays = (means, inverses, deviations, refs)
        self._cells[key] = arrays
        return arrays

    def _neighborhood(self, key):
        if key in self._hoods:
            return self._hoods[key]
        row, col = key
        parts = []
        for dr in (-1, 0, 1):
            for dc in (-1, 0, 1):
                neighbor = (row + dr, col + dc)
                if neighbor in self.model.cells:
                    parts.append(self._cell_arrays(neighbor))
        if not parts:
            hood = None
        else:
            means = np.concatenate([p[0] for p in parts])
            inverses = np.concatenate([p[1] for p in parts])
            deviations = np.concatenate([p[2] for p in parts])
            refs = [r for p in parts for r in p[3]]
            hood = (means, inverses, deviations, refs)
        self._hoods[key] = hood
        return hood

    def score(self, x) -> ScoreReport:
        x = np.asarray(x, dtype=float)
        key = self.model.spec.grid.cell_index(x[LON], x[LAT])
        hood = self._neighborhood(key)
        if hood is None:
            return ScoreReport(matched=False)
        means, inverses, deviations, refs = hood
        deltas = x - means
        deltas[:, COG] = (deltas[:, COG] + 180.0) % 360.0 - 180.0
        normalized = deltas / self.scales
        nearest = int(np.argmin((normalized * normalized).sum(axis=1)))
        v = normalized[nearest]
        d2 = float(v @ inverses[nearest] @ v)
        z = v / deviations[nearest]
        per_dim = tuple(two_sided_p(float(zj)) for zj in z)
        return ScoreReport(
            matched=True,
            prototype_ref=refs[nearest],
            mahalanobis_sq=d2,
            p_value=chi2_sf_4dof(d2),
            per_dim_p=per_dim,
        )


def classify(report: ScoreReport, th: DetectionThresholds) -> str:
    """Typed verdict for one score report.

    Unmatched records are position anomalies by definition. A matched record
    is normal only when the joint test and every per-dimension test pass.
    Otherwise the verdict follows the smallest offending per-dimension
    p-value (ties go to the earlier dimension: lon, lat, sog, cog).
    """
    if not report.matched:
        return POSITION
    below = [
        (report.per_dim_p[dim], dim)
        for dim in range(STATE_DIMS)
        if report.per_dim_p[dim] < th.for_dim(dim)
    ]
    if not below and report.p_value >= th.joint:
        return NORMAL
    if below:
        _, dim = min(below)
    else:
        # Joint failure with every dimension individually acceptable:
        # attribute it to the weakest dimension overall.
        _, dim = min((p, d) for d, p in enumerate(report.per_dim_p))
    return DIM_GROUP[dim]


@dataclass
class DetectStats:
    scored: int = 0
    skipped_other_type: int = 0


def detect_batch(model: MovementModel, records, th: DetectionThresholds):
    """Score every record of the model's ship type, preserving input order."""
    scorer = Scorer(model)
    stats = DetectStats()
    out: list[AnomalyRecord] = []
    for rec in records:
        if rec.ship_type != model.spec.ship_type:
            stats.skipped_other_type += 1
            continue
        report = scorer.score(rec.state_vector())
        out.append(AnomalyRecord(rec, classify(report, th), report))
        stats.scored += 1
    return out, stats


def _fmt(value: float | None) -> str:
    return "" if value is None else repr(float(value))


def write_anomaly_csv(path, results) -> int:
    """Write scored records (normal ones included, for a complete universe)."""
    n = 0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(ANOMALY_COLUMNS)
        for item in results:
            rec, rep = item.record, item.report
            if rep.matched:
                pvals = [rep.p_value, *rep.per_dim_p]
            else:
                pvals = [None] * 5
            writer.writerow(
                [
                    rec.mmsi,
                    rec.timestamp.astimezone(timezone.utc).isoformat(),
                    repr(rec.lon),
                    repr(rec.lat),
                    repr(rec.sog),
                    repr(rec.cog),
                    item.verdict,
                    *[_fmt(p) for p in pvals],
                ]
            )
            n += 1
    return n


@dataclass
class ScoredRow:
    """One line of an anomaly CSV, parsed back for events and comparisons."""

    mmsi: int
    timestamp: datetime
    lon: float
    lat: float
    sog: float
    cog: float
    verdict: str
    p_value: float | None

    @property
    def anomalous(self) -> bool:
        return self.verdict != NORMAL


def read_anomaly_csv(path) -> list[ScoredRow]:
    rows: list[ScoredRow] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in ANOMALY_COLUMNS if c not in header]
        if missing:
            raise ValueError(f"{path}: missing anomaly columns {missing}")
        for row in reader:
            if row["verdict"] not in VERDICTS:
                raise ValueError(f"{path}: unknown verdict {row['verdict']!r}")
            rows.append(
                ScoredRow(
                    mmsi=int(row["mmsi"]),
                    timestamp=datetime.fromisoformat(row["timestamp"]),
                    lon=float(row["lon"]),
                    lat=float(row["lat"]),
                    sog=float(row["sog"]),
                    cog=float(row["cog"]),
                    verdict=row["verdict"],
                    p_value=float(row["p_value"]) if row["p_value"] else None,
                )
            )
    return rows
