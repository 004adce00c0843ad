"""Exact communication-cost accounting.

Every ledger entry records the on-wire size of one protocol frame (payload
plus the 5-byte frame header). Model payloads and control traffic are kept
in separate categories so model-only totals can be compared against a raw
data upload baseline.
"""

from __future__ import annotations

import csv
import threading
from dataclasses import dataclass

DIR_UP = "client_to_server"
DIR_DOWN = "server_to_client"
DIRECTIONS = (DIR_UP, DIR_DOWN)

CAT_MODEL = "model"
CAT_CONTROL = "control"
CATEGORIES = (CAT_MODEL, CAT_CONTROL)

LEDGER_COLUMNS = ("round", "direction", "client", "category", "bytes")


@dataclass(frozen=True)
class TransferEntry:
    round_no: int
    direction: str
    client: int
    category: str
    n_bytes: int
    seq: int  # per-connection message sequence, for a canonical sort order


class CostLedger:
    """Thread-safe append-only transfer log."""

    def __init__(self):
        self._entries: list[TransferEntry] = []
        self._lock = threading.Lock()

    def record(self, round_no: int, direction: str, client: int,
               category: str, n_bytes: int, seq: int = 0) -> None:
        if direction not in DIRECTIONS:
            raise ValueError(f"unknown direction {direction!r}")
        if category not in CATEGORIES:
            raise ValueError(f"unknown category {category!r}")
        if n_bytes < 0:
            raise ValueError("n_bytes must be >= 0")
        entry = TransferEntry(round_no, direction, client, category, n_bytes, seq)
        with self._lock:
            self._entries.append(entry)

    def entries(self) -> list[TransferEntry]:
        """Entries in canonical order: (round, client, sequence).

        Session threads interleave arbitrarily, so the canonical order is
        what makes ledgers comparable across transports and runs.
        """
        with self._lock:
            return sorted(
                self._entries,
                key=lambda e: (e.round_no, e.client, e.seq, e.direction),
            )

    def total(self, direction: str | None = None,
              category: str | None = None) -> int:
        return sum(
            e.n_bytes
            for e in self.entries()
            if (direction is None or e.direction == direction)
            and (category is None or e.category == category)
        )

    def model_bytes_by_round(self) -> dict[int, dict[str, int]]:
        rounds: dict[int, dict[str, int]] = {}
        for e in self.entries():
            if e.category != CAT_MODEL:
                continue
            per_dir = rounds.setdefault(e.round_no, {DIR_UP: 0, DIR_DOWN: 0})
            per_dir[e.direction] += e.n_bytes
        return rounds

    def rows(self) -> list[tuple]:
        return [
            (e.round_no, e.direction, e.client, e.category, e.n_bytes)
            for e in self.entries()
        ]

    def write_csv(self, path) -> int:
        rows = self.rows()
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(LEDGER_COLUMNS)
            writer.writerows(rows)
        return len(rows)

    @classmethod
    def read_csv(cls, path) -> "CostLedger":
        ledger = cls()
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            header = reader.fieldnames or []
            missing = [c for c in LEDGER_COLUMNS if c not in header]
            if missing:
                raise ValueError(f"{path}: missing ledger columns {missing}")
            for seq, row in enumerate(reader):
                ledger.record(
                    int(row["round"]),
                    row["direction"],
                    int(row["client"]),
                    row["category"],
                    int(row["bytes"]),
                    seq=seq,
                )
        return ledger


def reduction_pct(federated_bytes: float, baseline_bytes: float) -> float:
    """Percentage saved versus uploading the raw training data."""
    if baseline_bytes <= 0:
        raise ValueError("baseline byte count must be positive")
    return 100.0 * (1.0 - federated_bytes / baseline_bytes)


@dataclass
class CostReport:
    upload_model: int
    download_model: int
    upload_control: int
    download_control: int
    per_round: dict[int, dict[str, int]]
    baseline_bytes: int
    reduction: float  # percent, model bytes vs baseline

    @property
    def model_total(self) -> int:
        return self.upload_model + self.download_model

    @property
    def control_total(self) -> int:
        return self.upload_control + self.download_control


def summarize_costs(ledger: CostLedger, baseline_bytes: int) -> CostReport:
    upload_model = ledger.total(DIR_UP, CAT_MODEL)
    download_model = ledger.total(DIR_DOWN, CAT_MODEL)
    return CostReport(
        upload_model=upload_model,
        download_model=download_model,
        upload_control=ledger.total(DIR_UP, CAT_CONTROL),
        download_control=ledger.total(DIR_DOWN, CAT_CONTROL),
        per_round=ledger.model_bytes_by_round(),
        baseline_bytes=baseline_bytes,
        reduction=reduction_pct(upload_model + download_model, baseline_bytes),
    )


def cost_text(report: CostReport) -> str:
    lines = [
        f"baseline (raw training data upload): {report.baseline_bytes:,} bytes",
        f"model bytes uploaded:   {report.upload_model:,}",
        f"model bytes downloaded: {report.download_model:,}",
        f"control bytes total:    {report.control_total:,}",
        f"model-traffic reduction vs baseline: {report.reduction:.1f}%",
        "",
        "round  up_model_bytes  down_model_bytes",
    ]
    for round_no in sorted(report.per_round):
        per_dir = report.per_round[round_no]
        lines.append(
            f"{round_no:>5}  {per_dir[DIR_UP]:>14,}  {per_dir[DIR_DOWN]:>16,}"
        )
    return "\n".join(lines) + "\n"
