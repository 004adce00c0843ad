"""Synthetic AIS traffic for desk-scale experiments.

Vessels follow fixed shipping lanes with Gaussian speed and course noise,
repeating the same route every day so daily training chunks are comparable.
Anomalies are injected by mutating the reported values of selected records
(off-lane position, speed spike, reversed course) while a ground-truth
sidecar keeps the labels.
"""

from __future__ import annotations

import csv
import dataclasses
import math
from dataclasses import dataclass
from datetime import date, datetime, timedelta, timezone

import numpy as np

from .ingest import AisRecord
from .model import (
    SHIP_TYPES,
    Cell,
    ModelSpec,
    MovementModel,
    Prototype,
    norm_course,
)

KNOT_MS = 0.514444
M_PER_DEG_LAT = 111_195.0

LABEL_COLUMNS = ("mmsi", "timestamp", "label")


@dataclass(frozen=True)
class Lane:
    waypoints: tuple[tuple[float, float], ...]
    base_speed_kn: float = 12.0

    def __post_init__(self):
        if len(self.waypoints) < 2:
            raise ValueError("a lane needs at least two waypoints")


# Three one-way lanes in the Kattegat approaches, separated by well over
# 0.1 degrees of latitude so off-lane offsets never land on a neighbor lane.
DEFAULT_LANES = (
    Lane(waypoints=((11.30, 57.55), (11.70, 57.64), (11.95, 57.70))),
    Lane(waypoints=((11.25, 57.40), (12.05, 57.41)), base_speed_kn=14.0),
    Lane(waypoints=((11.40, 57.86), (12.00, 57.84)), base_speed_kn=10.0),
)


@dataclass(frozen=True)
class SynthConfig:
    lanes: tuple[Lane, ...] = DEFAULT_LANES
    ship_types: tuple[str, ...] = SHIP_TYPES
    n_vessels: int = 9
    start_day: date = date(2025, 7, 1)
    n_days: int = 3
    records_per_vessel_day: int = 240
    interval_s: int = 60
    speed_noise_kn: float = 0.3
    course_noise_deg: float = 3.0
    position_rate: float = 0.0
    speed_rate: float = 0.0
    direction_rate: float = 0.0
    position_offset_deg: float = 0.05
    speed_spike_kn: float = 15.0
    seed: int = 7

    def __post_init__(self):
        if self.n_vessels < 1 or self.n_days < 1:
            raise ValueError("need at least one vessel and one day")
        if 6 * 3600 + self.records_per_vessel_day * self.interval_s > 86_400:
            raise ValueError("daily track does not fit inside one UTC day")
        if self.position_rate + self.speed_rate + self.direction_rate > 0.5:
            raise ValueError("anomaly rates are per-record fractions; keep them small")
        for st in self.ship_types:
            if st not in SHIP_TYPES:
                raise ValueError(f"unknown ship type {st!r}")


def _bearing_deg(lon1, lat1, lon2, lat2) -> float:
    """Initial bearing from point 1 to point 2, degrees clockwise from north."""
    east = (lon2 - lon1) * math.cos(math.radians((lat1 + lat2) / 2))
    north = lat2 - lat1
    return norm_course(math.degrees(math.atan2(east, north)))


def _simulate_vessel_day(rng, lane: Lane, t0: datetime, cfg: SynthConfig):
    """One vessel-day of records along a one-way lane (wraps back to start)."""
    lon, lat = lane.waypoints[0]
    target = 1
    rows = []
    for step in range(cfg.records_per_vessel_day):
        tlon, tlat = lane.waypoints[target]
        heading = norm_course(
            _bearing_deg(lon, lat, tlon, tlat)
            + rng.normal(0.0, cfg.course_noise_deg)
        )
        speed = max(lane.base_speed_kn + rng.normal(0.0, cfg.speed_noise_kn), 0.5)
        rows.append(
            (t0 + timedelta(seconds=step * cfg.interval_s), lon, lat, speed, heading)
        )
        dist_m = speed * KNOT_MS * cfg.interval_s
        rad = math.radians(heading)
        lat += dist_m * math.cos(rad) / M_PER_DEG_LAT
        lon += dist_m * math.sin(rad) / (M_PER_DEG_LAT * math.cos(math.radians(lat)))
        remaining_m = math.hypot(
            (tlon - lon) * M_PER_DEG_LAT * math.cos(math.radians(lat)),
            (tlat - lat) * M_PER_DEG_LAT,
        )
        if remaining_m < dist_m:
            target += 1
            if target == len(lane.waypoints):
                # New trip: jump back to the lane start, keeping one-way flow.
                lon, lat = lane.waypoints[0]
                target = 1
    return rows


def generate(cfg: SynthConfig):
    """Deterministic synthetic records plus ground-truth labels.

    Returns (records, labels) where labels is a list of
    (mmsi, timestamp, kind) for every mutated record.
    """
    rng = np.random.default_rng(cfg.seed)
    records: list[AisRecord] = []
    for v in range(cfg.n_vessels):
        lane = cfg.lanes[v % len(cfg.lanes)]
        # Advance the type index at a different stride so types are not
        # pinned to lanes when both lists have the same length.
        ship_type = cfg.ship_types[(v // len(cfg.lanes)) % len(cfg.ship_types)]
        mmsi = 219_000_000 + v
        for d in range(cfg.n_days):
            day = cfg.start_day + timedelta(days=d)
            t0 = datetime(day.year, day.month, day.day, 6, 0, 0, tzinfo=timezone.utc)
            t0 += timedelta(seconds=97 * v)
            for ts, lon, lat, sog, cog in _simulate_vessel_day(rng, lane, t0, cfg):
                records.append(AisRecord(mmsi, ts, lon, lat, sog, cog, ship_type))
    records.sort(key=lambda r: (r.timestamp, r.mmsi))
    labels = _inject_anomalies(records, cfg, rng)
    return records, labels


def _inject_anomalies(records, cfg: SynthConfig, rng):
    n = len(records)
    n_pos = round(cfg.position_rate * n)
    n_sog = round(cfg.speed_rate * n)
    n_cog = round(cfg.direction_rate * n)
    if n_pos + n_sog + n_cog == 0:
        return []
    picks = rng.permutation(n)[: n_pos + n_sog + n_cog]
    labels = []
    for k, idx in enumerate(picks):
        rec = records[idx]
        if k < n_pos:
            # Sideways ghost position, several cells off the lane; the
            # reported speed and course stay believable.
            side = 1.0 if rng.random() < 0.5 else -1.0
            rad = math.radians(rec.cog)
            off = side * cfg.position_offset_deg
            mutated = dataclasses.replace(
                rec,
                lon=rec.lon + off * math.cos(rad),
                lat=rec.lat - off * math.sin(rad),
            )
            kind = "position"
        elif k < n_pos + n_sog:
            mutated = dataclasses.replace(rec, sog=rec.sog + cfg.speed_spike_kn)
            kind = "speed"
        else:
            mutated = dataclasses.replace(rec, cog=norm_course(rec.cog + 180.0))
            kind = "direction"
        records[idx] = mutated
        labels.append((mutated.mmsi, mutated.timestamp, kind))
    labels.sort(key=lambda item: (item[1], item[0]))
    return labels


def write_labels_csv(path, labels) -> int:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(LABEL_COLUMNS)
        for mmsi, ts, kind in labels:
            writer.writerow([mmsi, ts.astimezone(timezone.utc).isoformat(), kind])
    return len(labels)


def read_labels_csv(path):
    labels = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            labels.append(
                (
                    int(row["mmsi"]),
                    datetime.fromisoformat(row["timestamp"]),
                    row["label"],
                )
            )
    return labels


def build_gaussian_grid_model(
    spec: ModelSpec,
    n_cells: int = 25,
    count: int = 100_000,
    position_sd_deg: float = 0.002,
    sog_mean: float = 10.0,
    sog_sd: float = 0.3,
    cog_mean: float = 45.0,
    cog_sd: float = 4.0,
) -> MovementModel:
    """A synthetic trained model: one Gaussian prototype per cell, in a row.

    Useful for calibration studies where the true distribution must be known
    exactly; the prototype moments are set directly instead of trained.
    """
    model = MovementModel.empty(spec)
    variances = np.array(
        [position_sd_deg**2, position_sd_deg**2, sog_sd**2, cog_sd**2]
    )
    for j in range(n_cells):
        key = (0, j)
        lon, lat = spec.grid.cell_center(*key)
        mean = np.array([lon, lat, sog_mean, cog_mean])
        proto = Prototype(mean=mean, m2=np.diag(variances) * count, count=count)
        model.cells[key] = Cell(index=key, prototypes=[proto])
    model.trained_records = n_cells * count
    return model


def sample_from_model(model: MovementModel, n: int, seed: int,
                      start: datetime | None = None) -> list[AisRecord]:
    """Draw records from the model's own mixture (for calibration checks)."""
    if start is None:
        start = datetime(2025, 8, 1, tzinfo=timezone.utc)
    protos = [
        proto
        for key in sorted(model.cells)
        for proto in model.cells[key].prototypes
    ]
    if not protos:
        raise ValueError("model has no prototypes to sample from")
    counts = np.array([p.count for p in protos], dtype=float)
    rng = np.random.default_rng(seed)
    per_proto = rng.multinomial(n, counts / counts.sum())
    draws = []
    for proto, c in zip(protos, per_proto):
        if c == 0:
            continue
        draws.append(
            rng.multivariate_normal(proto.mean, proto.covariance(), size=c,
                                    check_valid="ignore")
        )
    states = np.concatenate(draws)
    records = []
    for i, row in enumerate(states):
        records.append(
            AisRecord(
                mmsi=999_000_001,
                timestamp=start + timedelta(seconds=i),
                lon=float(row[0]),
                lat=float(row[1]),
                sog=max(float(row[2]), 0.0),
                cog=norm_course(float(row[3])),
                ship_type=model.spec.ship_type,
            )
        )
    return records
