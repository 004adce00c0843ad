"""AIS CSV ingestion: parsing, filtering, antenna assignment, day chunking.

Input follows the Danish AIS archive layout: a header row with at least
`# Timestamp` (dd/MM/yyyy HH:mm:ss), `MMSI`, `Latitude`, `Longitude`, `SOG`,
`COG` and `Ship type`. Extra columns are ignored. Only cargo, tanker and
passenger records survive filtering; everything else is counted and dropped.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta, timezone

import numpy as np

from .model import SHIP_TYPES

EARTH_RADIUS_M = 6_371_000.0

TIMESTAMP_COLUMN = "# Timestamp"
TIMESTAMP_FORMAT = "%d/%m/%Y %H:%M:%S"
REQUIRED_COLUMNS = (
    TIMESTAMP_COLUMN,
    "MMSI",
    "Latitude",
    "Longitude",
    "SOG",
    "COG",
    "Ship type",
)

DEFAULT_ANTENNA_RADIUS_M = 13_000.0
# Three fictitious receiver sites around the Gothenburg approaches.
DEFAULT_ANTENNAS = (
    (11.96524, 57.70730, DEFAULT_ANTENNA_RADIUS_M),
    (11.63979, 57.71941, DEFAULT_ANTENNA_RADIUS_M),
    (11.78460, 57.57255, DEFAULT_ANTENNA_RADIUS_M),
)


@dataclass
class AisRecord:
    mmsi: int
    timestamp: datetime
    lon: float
    lat: float
    sog: float
    cog: float
    ship_type: str

    def state_vector(self) -> np.ndarray:
        return np.array([self.lon, self.lat, self.sog, self.cog])

    def utc_date(self) -> date:
        return self.timestamp.astimezone(timezone.utc).date()


@dataclass
class DropStats:
    other_type: int = 0
    missing_field: int = 0
    unparseable: int = 0

    @property
    def total(self) -> int:
        return self.other_type + self.missing_field + self.unparseable


def parse_timestamp(text: str) -> datetime:
    return datetime.strptime(text, TIMESTAMP_FORMAT).replace(tzinfo=timezone.utc)


def parse_ais_csv(path) -> tuple[list[AisRecord], DropStats]:
    """Read one AIS CSV file, returning kept records and drop counts.

    Row-level problems never abort the run; a missing required column does.
    Checks run in a fixed order per row: ship-type filter, completeness,
    then value parsing, so each dropped row is counted exactly once.
    """
    records: list[AisRecord] = []
    stats = DropStats()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in REQUIRED_COLUMNS if c not in header]
        if missing:
            raise ValueError(f"{path}: missing required columns {missing}")
        for row in reader:
            ship_raw = (row.get("Ship type") or "").strip()
            if ship_raw and ship_raw.lower() not in SHIP_TYPES:
                stats.other_type += 1
                continue
            values = {c: (row.get(c) or "").strip() for c in REQUIRED_COLUMNS}
            if any(not v for v in values.values()):
                stats.missing_field += 1
                continue
            try:
                ts = parse_timestamp(values[TIMESTAMP_COLUMN])
                mmsi = int(values["MMSI"])
                lat = float(values["Latitude"])
                lon = float(values["Longitude"])
                sog = float(values["SOG"])
                cog = float(values["COG"]) % 360.0
                if not (-90.0 <= lat <= 90.0 and -180.0 <= lon <= 180.0):
                    raise ValueError("coordinates out of range")
                if sog < 0:
                    raise ValueError("negative speed")
            except ValueError:
                stats.unparseable += 1
                continue
            records.append(
                AisRecord(mmsi, ts, lon, lat, sog, cog, ship_raw.lower())
            )
    return records, stats


def write_ais_csv(path, records) -> int:
    """Write records in the same archive layout parse_ais_csv reads."""
    n = 0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(REQUIRED_COLUMNS)
        for rec in records:
            writer.writerow(
                [
                    rec.timestamp.strftime(TIMESTAMP_FORMAT),
                    rec.mmsi,
                    rec.lat,
                    rec.lon,
                    rec.sog,
                    rec.cog,
                    rec.ship_type.capitalize(),
                ]
            )
            n += 1
    return n


def haversine_m(lon1: float, lat1: float, lon2: float, lat2: float) -> float:
    """Great-circle distance in meters on a 6,371 km sphere."""
    phi1, phi2 = math.radians(lat1), math.radians(lat2)
    dphi = phi2 - phi1
    dlam = math.radians(lon2 - lon1)
    a = math.sin(dphi / 2) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2) ** 2
    return 2 * EARTH_RADIUS_M * math.asin(math.sqrt(a))


@dataclass(frozen=True)
class AntennaSpec:
    center_lon: float
    center_lat: float
    radius_m: float = DEFAULT_ANTENNA_RADIUS_M

    def __post_init__(self):
        if self.radius_m <= 0:
            raise ValueError("radius_m must be positive")

    def covers(self, lon: float, lat: float) -> bool:
        return haversine_m(lon, lat, self.center_lon, self.center_lat) <= self.radius_m


def default_antennas() -> list[AntennaSpec]:
    return [AntennaSpec(*a) for a in DEFAULT_ANTENNAS]


@dataclass
class CoverageStats:
    covered: int = 0
    dropped: int = 0
    multi_assigned: int = 0
    duplicated_total: int = 0

    @property
    def overlap_fraction(self) -> float:
        return self.multi_assigned / self.covered if self.covered else 0.0


def assign_to_antennas(records, antennas: list[AntennaSpec]):
    """Route each record to every antenna whose circle covers it.

    Overlap duplicates records on purpose; records no antenna covers are
    dropped and counted.
    """
    if not antennas:
        raise ValueError("at least one antenna required")
    per_antenna: dict[int, list[AisRecord]] = {i: [] for i in range(len(antennas))}
    stats = CoverageStats()
    for rec in records:
        hits = [i for i, a in enumerate(antennas) if a.covers(rec.lon, rec.lat)]
        if not hits:
            stats.dropped += 1
            continue
        stats.covered += 1
        stats.duplicated_total += len(hits)
        if len(hits) > 1:
            stats.multi_assigned += 1
        for i in hits:
            per_antenna[i].append(rec)
    return per_antenna, stats


@dataclass(frozen=True)
class RoundPlan:
    """Ordered training rounds, each naming an inclusive UTC date range."""

    rounds: tuple[str, ...]

    @property
    def n_rounds(self) -> int:
        return len(self.rounds)

    def descriptor(self, round_no: int) -> str:
        if not 1 <= round_no <= len(self.rounds):
            raise ValueError(f"round {round_no} outside plan")
        return self.rounds[round_no - 1]


def format_descriptor(first: date, last: date) -> str:
    return f"{first.isoformat()}/{last.isoformat()}"


def parse_descriptor(descriptor: str) -> tuple[date, date]:
    try:
        first_text, last_text = descriptor.split("/")
        first = date.fromisoformat(first_text)
        last = date.fromisoformat(last_text)
    except ValueError as exc:
        raise ValueError(f"bad chunk descriptor {descriptor!r}") from exc
    if last < first:
        raise ValueError(f"descriptor range reversed: {descriptor!r}")
    return first, last


def plan_from_days(days: list[date], days_per_round: int = 1) -> RoundPlan:
    if days_per_round < 1:
        raise ValueError("days_per_round must be >= 1")
    days = sorted(set(days))
    rounds = []
    for i in range(0, len(days), days_per_round):
        group = days[i : i + days_per_round]
        rounds.append(format_descriptor(group[0], group[-1]))
    return RoundPlan(rounds=tuple(rounds))


def plan_from_start(start: date, n_rounds: int, days_per_round: int = 1) -> RoundPlan:
    """Consecutive-day plan used when a server has no data to inspect."""
    rounds = []
    for t in range(n_rounds):
        first = start + timedelta(days=t * days_per_round)
        last = first + timedelta(days=days_per_round - 1)
        rounds.append(format_descriptor(first, last))
    return RoundPlan(rounds=tuple(rounds))


def read_plan_file(path) -> RoundPlan:
    rounds = []
    previous_last = None
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            first, last = parse_descriptor(line)
            if previous_last is not None and first <= previous_last:
                raise ValueError(f"plan rounds overlap or run backwards at {line!r}")
            previous_last = last
            rounds.append(line)
    if not rounds:
        raise ValueError(f"{path}: no rounds in plan")
    return RoundPlan(rounds=tuple(rounds))


def chunk_by_day(records, days_per_round: int = 1) -> RoundPlan:
    """One round per distinct UTC day present in the data, oldest first."""
    days = sorted({rec.utc_date() for rec in records})
    return plan_from_days(days, days_per_round)


class DailyDataSource:
    """Resolves chunk descriptors against an in-memory record list."""

    def __init__(self, records):
        self._by_day: dict[date, list[AisRecord]] = {}
        for rec in records:
            self._by_day.setdefault(rec.utc_date(), []).append(rec)

    def records_for(self, descriptor: str) -> list[AisRecord]:
        first, last = parse_descriptor(descriptor)
        out: list[AisRecord] = []
        day = first
        while day <= last:
            out.extend(self._by_day.get(day, ()))
            day += timedelta(days=1)
        return out
