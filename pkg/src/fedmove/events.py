"""Anomaly events and model-to-model comparison.

An event is a maximal run of anomalous records from one vessel in which
consecutive anomalous records are at most `max_gap_s` apart. Comparison
between two detection runs is plain record-level set arithmetic over a
shared record universe.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from datetime import timezone

import numpy as np

from .detect import DIRECTION, NORMAL, POSITION, SPEED

DEFAULT_MAX_GAP_S = 60.0

# Tie-break order for the modal event type, most severe first.
_TYPE_SEVERITY = {POSITION: 3, DIRECTION: 2, SPEED: 1}

EVENT_COLUMNS = ("mmsi", "start", "end", "duration_s", "n_records", "main_type")

BUCKET_SHORT = "lt_60s"
BUCKET_MID = "60s_to_10min"
BUCKET_LONG = "gt_10min"


@dataclass
class AnomalyEvent:
    mmsi: int
    records: list  # ScoredRow or AnomalyRecord-like, sorted by time

    @property
    def start(self):
        return self.records[0].timestamp

    @property
    def end(self):
        return self.records[-1].timestamp

    @property
    def duration_s(self) -> float:
        return (self.end - self.start).total_seconds()

    @property
    def n_records(self) -> int:
        return len(self.records)

    @property
    def main_type(self) -> str:
        counts: dict[str, int] = {}
        for rec in self.records:
            counts[rec.verdict] = counts.get(rec.verdict, 0) + 1
        return max(counts, key=lambda t: (counts[t], _TYPE_SEVERITY[t]))


def _timestamp(rec):
    return rec.timestamp


def group_events(rows, max_gap_s: float = DEFAULT_MAX_GAP_S) -> list[AnomalyEvent]:
    """Partition anomalous records into per-vessel maximal gap-bounded runs.

    Normal rows are ignored, so the gap is measured between consecutive
    anomalous records even when clean records lie in between.
    """
    anomalous = [r for r in rows if r.verdict != NORMAL]
    anomalous.sort(key=lambda r: (r.mmsi, r.timestamp))
    events: list[AnomalyEvent] = []
    current: list = []
    for rec in anomalous:
        if current and (
            rec.mmsi != current[-1].mmsi
            or (rec.timestamp - current[-1].timestamp).total_seconds() > max_gap_s
        ):
            events.append(AnomalyEvent(current[0].mmsi, current))
            current = []
        current.append(rec)
    if current:
        events.append(AnomalyEvent(current[0].mmsi, current))
    return events


@dataclass
class EventStats:
    n_events: int
    buckets: dict[str, int]
    quantiles_s: dict[int, float]

    def fraction(self, bucket: str) -> float:
        return self.buckets[bucket] / self.n_events if self.n_events else 0.0


def event_stats(events) -> EventStats:
    """Duration histogram in the buckets <60 s, 60 s to 10 min, >10 min."""
    buckets = {BUCKET_SHORT: 0, BUCKET_MID: 0, BUCKET_LONG: 0}
    durations = []
    for ev in events:
        d = ev.duration_s
        durations.append(d)
        if d < 60.0:
            buckets[BUCKET_SHORT] += 1
        elif d <= 600.0:
            buckets[BUCKET_MID] += 1
        else:
            buckets[BUCKET_LONG] += 1
    if durations:
        qs = np.percentile(durations, [0, 25, 50, 75, 100])
        quantiles = {p: float(v) for p, v in zip((0, 25, 50, 75, 100), qs)}
    else:
        quantiles = {}
    return EventStats(n_events=len(events), buckets=buckets, quantiles_s=quantiles)


def write_events_csv(path, events) -> int:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(EVENT_COLUMNS)
        for ev in events:
            writer.writerow(
                [
                    ev.mmsi,
                    ev.start.astimezone(timezone.utc).isoformat(),
                    ev.end.astimezone(timezone.utc).isoformat(),
                    int(round(ev.duration_s)),
                    ev.n_records,
                    ev.main_type,
                ]
            )
    return len(events)


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fn: int
    fp: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fn + self.fp + self.tn


def compare_models(baseline_flags: set, candidate_flags: set,
                   total_records: int) -> ConfusionCounts:
    """Record-level confusion counts with one run treated as the baseline."""
    union = baseline_flags | candidate_flags
    if total_records < len(union):
        raise ValueError("flag sets exceed the record universe")
    tp = len(baseline_flags & candidate_flags)
    fn = len(baseline_flags - candidate_flags)
    fp = len(candidate_flags - baseline_flags)
    tn = total_records - tp - fn - fp
    return ConfusionCounts(tp=tp, fn=fn, fp=fp, tn=tn)


def confusion_text(counts: ConfusionCounts, baseline_name: str = "baseline",
                   candidate_name: str = "candidate") -> str:
    """Plain-text confusion table with counts and percentages of the total."""
    total = counts.total

    def fmt(label, value):
        pct = 100.0 * value / total if total else 0.0
        return f"{label} = {value:,} ({pct:.1f}%)"

    col = max(
        len(fmt("TP", counts.tp)),
        len(fmt("FP", counts.fp)),
    )
    lines = [
        f"record universe: {total:,} scored records",
        f"rows: {baseline_name} verdict, columns: {candidate_name} verdict",
        "",
        f"{'':>18}  {'anomaly':<{col}}  normal",
        f"{'anomaly':>18}  {fmt('TP', counts.tp):<{col}}  {fmt('FN', counts.fn)}",
        f"{'normal':>18}  {fmt('FP', counts.fp):<{col}}  {fmt('TN', counts.tn)}",
    ]
    return "\n".join(lines) + "\n"
