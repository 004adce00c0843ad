"""Report figures rendered to image files next to the delimited outputs."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .events import BUCKET_LONG, BUCKET_MID, BUCKET_SHORT, ConfusionCounts, EventStats
from .federation.ledger import DIR_DOWN, DIR_UP, CostReport

_BUCKET_LABELS = {
    BUCKET_SHORT: "< 60 s",
    BUCKET_MID: "60 s to 10 min",
    BUCKET_LONG: "> 10 min",
}


def save_event_duration_figure(stats: EventStats, path) -> None:
    order = (BUCKET_SHORT, BUCKET_MID, BUCKET_LONG)
    counts = [stats.buckets[b] for b in order]
    fig, ax = plt.subplots(figsize=(6, 4))
    bars = ax.bar([_BUCKET_LABELS[b] for b in order], counts, color="#33658a")
    for bar, count in zip(bars, counts):
        pct = 100.0 * count / stats.n_events if stats.n_events else 0.0
        ax.annotate(f"{count:,}\n({pct:.0f}%)",
                    (bar.get_x() + bar.get_width() / 2, bar.get_height()),
                    ha="center", va="bottom", fontsize=9)
    ax.set_ylabel("events")
    ax.set_title(f"Anomaly event durations ({stats.n_events:,} events)")
    ax.margins(y=0.15)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_cost_figure(report: CostReport, path) -> None:
    rounds = sorted(report.per_round)
    up = [report.per_round[r][DIR_UP] for r in rounds]
    down = [report.per_round[r][DIR_DOWN] for r in rounds]
    fig, ax = plt.subplots(figsize=(7, 4))
    width = 0.4
    xs = range(len(rounds))
    ax.bar([x - width / 2 for x in xs], up, width, label="uploaded",
           color="#33658a")
    ax.bar([x + width / 2 for x in xs], down, width, label="downloaded",
           color="#f26419")
    ax.set_xticks(list(xs))
    ax.set_xticklabels([str(r) for r in rounds])
    ax.set_xlabel("round")
    ax.set_ylabel("model bytes")
    ax.set_title(
        f"Model traffic per round (total {report.model_total:,} bytes, "
        f"{report.reduction:.1f}% below baseline)"
    )
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_confusion_figure(counts: ConfusionCounts, path) -> None:
    labels = ("TP", "FN", "FP", "TN")
    values = (counts.tp, counts.fn, counts.fp, counts.tn)
    fig, ax = plt.subplots(figsize=(6, 4))
    bars = ax.bar(labels, values,
                  color=("#2f9e44", "#e8590c", "#e03131", "#868e96"))
    for bar, value in zip(bars, values):
        ax.annotate(f"{value:,}",
                    (bar.get_x() + bar.get_width() / 2, bar.get_height()),
                    ha="center", va="bottom", fontsize=9)
    if max(values) > 0:
        ax.set_yscale("symlog")
    ax.set_ylabel("records")
    ax.set_title(f"Record-level agreement ({counts.total:,} records)")
    ax.margins(y=0.2)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
