"""Command-line interface.

One executable, eleven subcommands covering the full workflow: synthesize or
ingest AIS data, train centrally or federated, score new data, group and
compare anomalies, account communication costs, and export map-ready
GeoJSON. Report commands render a figure next to their delimited output.
"""

from __future__ import annotations

import argparse
import os
import sys
from datetime import date
from pathlib import Path

from . import __version__
from .codec import MODEL_SUFFIX, read_model, write_model
from .config import RunConfig, build_config, parse_antennas
from .detect import AnomalyRecord, Scorer, classify, read_anomaly_csv, write_anomaly_csv
from .events import (
    compare_models,
    confusion_text,
    event_stats,
    group_events,
    write_events_csv,
)
from .federation import (
    FederationConfig,
    FederationError,
    parse_listen,
    run_client,
    run_federation,
    run_server,
    summarize_costs,
)
from .federation.ledger import CostLedger, cost_text
from .federation.transport import TcpListener, tcp_connect
from .geojson import anomaly_features, event_features, model_features, write_geojson
from .ingest import (
    DailyDataSource,
    assign_to_antennas,
    chunk_by_day,
    parse_ais_csv,
    plan_from_start,
    read_plan_file,
    write_ais_csv,
)
from .model import SHIP_TYPES
from .synthetic import SynthConfig, generate, write_labels_csv
from .training import train_model

VERDICT_ORDER = ("normal", "position", "speed", "direction")


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    g = parser.add_argument_group("model configuration")
    g.add_argument("--config", metavar="FILE",
                   help="key-value config file (flags override it)")
    g.add_argument("--origin", metavar="LON,LAT",
                   help="grid origin in degrees")
    g.add_argument("--cell-size", type=float, metavar="DEG")
    g.add_argument("--max-prototypes", type=int, metavar="P")
    g.add_argument("--d-new", type=float, metavar="D",
                   help="normalized distance above which a new prototype opens")
    g.add_argument("--scales", metavar="LON,LAT,SOG,COG",
                   help="per-dimension distance scales")
    g.add_argument("--thresholds", metavar="POS,SOG,COG",
                   help="p-value cutoffs for the three anomaly groups")
    g.add_argument("--antennas", metavar="LON,LAT,R[;...]",
                   help="antenna coverage circles (radius in meters)")


def _config_from_args(args) -> RunConfig:
    overrides: dict = {}
    if getattr(args, "origin", None):
        lon, lat = (float(v) for v in args.origin.split(","))
        overrides["origin_lon"] = lon
        overrides["origin_lat"] = lat
    if getattr(args, "cell_size", None) is not None:
        overrides["cell_size"] = args.cell_size
    if getattr(args, "max_prototypes", None) is not None:
        overrides["max_prototypes"] = args.max_prototypes
    if getattr(args, "d_new", None) is not None:
        overrides["d_new"] = args.d_new
    if getattr(args, "scales", None):
        parts = [float(v) for v in args.scales.split(",")]
        if len(parts) != 4:
            raise ValueError("--scales needs four comma-separated values")
        overrides.update(
            scale_lon=parts[0], scale_lat=parts[1],
            scale_sog=parts[2], scale_cog=parts[3],
        )
    if getattr(args, "thresholds", None):
        parts = [float(v) for v in args.thresholds.split(",")]
        if len(parts) != 3:
            raise ValueError("--thresholds needs three comma-separated values")
        overrides.update(th_pos=parts[0], th_sog=parts[1], th_cog=parts[2])
    if getattr(args, "antennas", None):
        overrides["antennas"] = parse_antennas(args.antennas)
    for key in ("days_per_round", "max_gap_s", "return_global", "transport",
                "seed_from_global"):
        if getattr(args, key, None) is not None:
            overrides[key] = getattr(args, key)
    return build_config(getattr(args, "config", None), overrides)


def _ship_type_list(text: str) -> list[str]:
    types = [t.strip().lower() for t in text.split(",") if t.strip()]
    for t in types:
        if t not in SHIP_TYPES:
            raise ValueError(f"unknown ship type {t!r}")
    return types


def _figure_path(args, out_path) -> str | None:
    if getattr(args, "no_figure", False):
        return None
    return args.figure or str(Path(out_path).with_suffix(".png"))


def cmd_gen_synthetic(args) -> int:
    cfg = SynthConfig(
        ship_types=tuple(_ship_type_list(args.ship_types)),
        n_vessels=args.vessels,
        start_day=date.fromisoformat(args.start_date),
        n_days=args.days,
        records_per_vessel_day=args.records_per_day,
        interval_s=args.interval,
        position_rate=args.position_rate,
        speed_rate=args.speed_rate,
        direction_rate=args.direction_rate,
        seed=args.seed,
    )
    records, labels = generate(cfg)
    n = write_ais_csv(args.out, records)
    print(f"wrote {n} records to {args.out}")
    labels_path = args.labels
    if labels_path is None and labels:
        labels_path = str(Path(args.out).with_suffix(".labels.csv"))
    if labels_path is not None:
        write_labels_csv(labels_path, labels)
        print(f"wrote {len(labels)} anomaly labels to {labels_path}")
    return 0


def cmd_ingest(args) -> int:
    config = _config_from_args(args)
    records, drops = parse_ais_csv(args.input)
    print(f"kept {len(records)} records "
          f"(dropped: {drops.other_type} other type, "
          f"{drops.missing_field} incomplete, {drops.unparseable} unparseable)")
    if args.out:
        write_ais_csv(args.out, records)
        print(f"wrote cleaned records to {args.out}")
    if args.clients_dir:
        antennas = config.antenna_specs()
        per_client, coverage = assign_to_antennas(records, antennas)
        os.makedirs(args.clients_dir, exist_ok=True)
        for idx in sorted(per_client):
            path = Path(args.clients_dir) / f"client{idx}.csv"
            write_ais_csv(path, per_client[idx])
            print(f"client {idx}: {len(per_client[idx])} records -> {path}")
        print(f"coverage: {coverage.covered} in range, {coverage.dropped} outside "
              f"all antennas, {coverage.overlap_fraction:.1%} multi-assigned")
    return 0


def _report_model(name: str, model, path, n_bytes: int) -> None:
    print(f"{name}: {model.trained_records} records, {len(model.cells)} cells, "
          f"{model.prototype_count()} prototypes -> {path} ({n_bytes} bytes)")


def cmd_train_central(args) -> int:
    config = _config_from_args(args)
    records, _ = parse_ais_csv(args.input)
    if not records:
        raise ValueError(f"{args.input}: no usable records")
    if args.ship_types:
        types = _ship_type_list(args.ship_types)
    else:
        present = {r.ship_type for r in records}
        types = [t for t in SHIP_TYPES if t in present]
    os.makedirs(args.out_dir, exist_ok=True)
    for ship_type in types:
        model = train_model(config.model_spec(ship_type), records)
        path = Path(args.out_dir) / f"{ship_type}{MODEL_SUFFIX}"
        n_bytes = write_model(model, path)
        _report_model(ship_type, model, path, n_bytes)
    return 0


def cmd_train_federated(args) -> int:
    config = _config_from_args(args)
    records, _ = parse_ais_csv(args.input)
    antennas = config.antenna_specs()
    per_client, coverage = assign_to_antennas(records, antennas)
    covered = [rec for recs in per_client.values() for rec in recs]
    if not covered:
        raise ValueError("no records inside any antenna coverage area")
    plan = chunk_by_day(covered, config.days_per_round)
    fed_cfg = FederationConfig(
        n_clients=len(antennas),
        n_rounds=plan.n_rounds,
        return_global=config.return_global,
        transport=config.transport,
    )
    if args.ship_types:
        types = _ship_type_list(args.ship_types)
    else:
        present = {r.ship_type for r in covered}
        types = [t for t in SHIP_TYPES if t in present]
    os.makedirs(args.out_dir, exist_ok=True)
    print(f"{len(antennas)} clients, {plan.n_rounds} rounds "
          f"({config.days_per_round} day(s) each), transport {fed_cfg.transport}, "
          f"{coverage.overlap_fraction:.1%} of covered records multi-assigned")
    for ship_type in types:
        spec = config.model_spec(ship_type)
        sources = {i: DailyDataSource(per_client[i]) for i in per_client}
        model, ledger, _ = run_federation(
            spec, fed_cfg, plan, sources, config.seed_from_global
        )
        path = Path(args.out_dir) / f"{ship_type}{MODEL_SUFFIX}"
        n_bytes = write_model(model, path)
        ledger_path = Path(args.out_dir) / f"{ship_type}.ledger.csv"
        ledger.write_csv(ledger_path)
        _report_model(ship_type, model, path, n_bytes)
        print(f"  ledger -> {ledger_path} "
              f"(model bytes up {ledger.total('client_to_server', 'model')}, "
              f"down {ledger.total('server_to_client', 'model')})")
    return 0


def _build_plan(args, config: RunConfig):
    if args.plan:
        return read_plan_file(args.plan)
    if not args.start_date or not args.rounds:
        raise ValueError("serve needs either --plan or --start-date with --rounds")
    return plan_from_start(date.fromisoformat(args.start_date), args.rounds,
                           config.days_per_round)


def cmd_serve(args) -> int:
    config = _config_from_args(args)
    spec = config.model_spec(args.ship_type)
    plan = _build_plan(args, config)
    if args.rounds and args.rounds != plan.n_rounds:
        raise ValueError(f"--rounds {args.rounds} contradicts the plan's "
                         f"{plan.n_rounds} rounds")
    fed_cfg = FederationConfig(
        n_clients=args.clients,
        n_rounds=plan.n_rounds,
        return_global=config.return_global,
        listen=args.listen,
        transport="tcp",
    )
    host, port = parse_listen(args.listen)
    listener = TcpListener(host, port)
    try:
        print(f"listening on {listener.address[0]}:{listener.address[1]}, "
              f"waiting for {args.clients} client(s), {plan.n_rounds} round(s)")
        model, ledger = run_server(spec, fed_cfg, plan, listener)
    finally:
        listener.close()
    n_bytes = write_model(model, args.out)
    _report_model(args.ship_type, model, args.out, n_bytes)
    if args.ledger:
        ledger.write_csv(args.ledger)
        print(f"ledger -> {args.ledger}")
    return 0


def cmd_client(args) -> int:
    config = _config_from_args(args)
    spec = config.model_spec(args.ship_type)
    records, _ = parse_ais_csv(args.data)
    source = DailyDataSource(records)
    host, port = parse_listen(args.connect)
    conn = tcp_connect(host, port, retries=args.connect_retries)
    try:
        ledger = run_client(spec, args.client_id, source, conn,
                            config.seed_from_global)
    finally:
        conn.close()
    print(f"client {args.client_id} finished "
          f"(uploaded {ledger.total('client_to_server', 'model')} model bytes)")
    if args.ledger:
        ledger.write_csv(args.ledger)
        print(f"ledger -> {args.ledger}")
    return 0


def _load_models(args) -> dict:
    models = {}
    if args.model:
        model = read_model(args.model)
        models[model.spec.ship_type] = model
    else:
        for ship_type in SHIP_TYPES:
            path = Path(args.models) / f"{ship_type}{MODEL_SUFFIX}"
            if path.exists():
                models[ship_type] = read_model(path)
        if not models:
            raise ValueError(f"no {MODEL_SUFFIX} model files in {args.models}")
    return models


def cmd_detect(args) -> int:
    config = _config_from_args(args)
    thresholds = config.thresholds()
    models = _load_models(args)
    records, _ = parse_ais_csv(args.input)
    scorers = {st: Scorer(m) for st, m in models.items()}
    results: list[AnomalyRecord] = []
    skipped = 0
    for rec in records:
        scorer = scorers.get(rec.ship_type)
        if scorer is None:
            skipped += 1
            continue
        report = scorer.score(rec.state_vector())
        results.append(AnomalyRecord(rec, classify(report, thresholds), report))
    write_anomaly_csv(args.out, results)
    counts = {v: 0 for v in VERDICT_ORDER}
    for item in results:
        counts[item.verdict] += 1
    summary = ", ".join(f"{counts[v]} {v}" for v in VERDICT_ORDER)
    print(f"scored {len(results)} records ({summary}); "
          f"skipped {skipped} without a model")
    print(f"anomaly table -> {args.out}")
    return 0


def cmd_events(args) -> int:
    config = _config_from_args(args)
    max_gap = args.max_gap if args.max_gap is not None else config.max_gap_s
    rows = read_anomaly_csv(args.anomalies)
    events = group_events(rows, max_gap)
    write_events_csv(args.out, events)
    stats = event_stats(events)
    print(f"{stats.n_events} events from "
          f"{sum(e.n_records for e in events)} anomalous records "
          f"(gap limit {max_gap:.0f} s)")
    for bucket, label in (("lt_60s", "< 60 s"), ("60s_to_10min", "60 s to 10 min"),
                          ("gt_10min", "> 10 min")):
        print(f"  {label}: {stats.buckets[bucket]} ({stats.fraction(bucket):.0%})")
    print(f"event table -> {args.out}")
    figure = _figure_path(args, args.out)
    if figure:
        from .figures import save_event_duration_figure

        save_event_duration_figure(stats, figure)
        print(f"figure -> {figure}")
    return 0


def cmd_compare(args) -> int:
    baseline = read_anomaly_csv(args.baseline)
    candidate = read_anomaly_csv(args.candidate)
    if len(baseline) != len(candidate):
        raise ValueError("anomaly tables cover different record universes "
                         f"({len(baseline)} vs {len(candidate)} rows)")
    for i, (b, c) in enumerate(zip(baseline, candidate)):
        if (b.mmsi, b.timestamp) != (c.mmsi, c.timestamp):
            raise ValueError(f"row {i}: record identity differs between tables")
    base_flags = {i for i, row in enumerate(baseline) if row.anomalous}
    cand_flags = {i for i, row in enumerate(candidate) if row.anomalous}
    counts = compare_models(base_flags, cand_flags, len(baseline))
    text = confusion_text(counts, Path(args.baseline).stem,
                          Path(args.candidate).stem)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(text)
    print(text, end="")
    print(f"report -> {args.out}")
    figure = _figure_path(args, args.out)
    if figure:
        from .figures import save_confusion_figure

        save_confusion_figure(counts, figure)
        print(f"figure -> {figure}")
    return 0


def cmd_costs(args) -> int:
    ledger = CostLedger.read_csv(args.ledger)
    if args.baseline_bytes is not None:
        baseline = args.baseline_bytes
    elif args.baseline_data:
        baseline = os.path.getsize(args.baseline_data)
    else:
        raise ValueError("costs needs --baseline-bytes or --baseline-data")
    report = summarize_costs(ledger, baseline)
    text = cost_text(report)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(text)
    print(text, end="")
    print(f"report -> {args.out}")
    figure = _figure_path(args, args.out)
    if figure:
        from .figures import save_cost_figure

        save_cost_figure(report, figure)
        print(f"figure -> {figure}")
    return 0


def cmd_export_geojson(args) -> int:
    config = _config_from_args(args)
    if args.model:
        collection = model_features(read_model(args.model))
    else:
        rows = read_anomaly_csv(args.anomalies)
        if args.group_events:
            max_gap = args.max_gap if args.max_gap is not None else config.max_gap_s
            collection = event_features(group_events(rows, max_gap))
        else:
            collection = anomaly_features(rows)
    write_geojson(args.out, collection)
    print(f"wrote {len(collection['features'])} features to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fedmove",
        description="Federated movement-model anomaly detection for AIS data.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-synthetic", help="generate synthetic AIS traffic")
    p.add_argument("--out", required=True, metavar="CSV")
    p.add_argument("--labels", metavar="CSV",
                   help="ground-truth sidecar (default: <out>.labels.csv "
                        "when anomalies are injected)")
    p.add_argument("--vessels", type=int, default=9)
    p.add_argument("--days", type=int, default=3)
    p.add_argument("--start-date", default="2025-07-01")
    p.add_argument("--records-per-day", type=int, default=240,
                   help="records per vessel per day")
    p.add_argument("--interval", type=int, default=60,
                   help="seconds between a vessel's reports")
    p.add_argument("--ship-types", default=",".join(SHIP_TYPES))
    p.add_argument("--position-rate", type=float, default=0.0)
    p.add_argument("--speed-rate", type=float, default=0.0)
    p.add_argument("--direction-rate", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=7)
    p.set_defaults(func=cmd_gen_synthetic)

    p = sub.add_parser("ingest", help="parse, filter, and split AIS data")
    p.add_argument("--input", required=True, metavar="CSV")
    p.add_argument("--out", metavar="CSV", help="write the cleaned records")
    p.add_argument("--clients-dir", metavar="DIR",
                   help="write one CSV per antenna coverage area")
    _add_config_flags(p)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("train-central", help="train one model per ship type")
    p.add_argument("--input", required=True, metavar="CSV")
    p.add_argument("--out-dir", required=True, metavar="DIR")
    p.add_argument("--ship-types", metavar="LIST",
                   help="comma-separated subset (default: types present)")
    _add_config_flags(p)
    p.set_defaults(func=cmd_train_central)

    p = sub.add_parser("train-federated",
                       help="run a local federated training round trip")
    p.add_argument("--input", required=True, metavar="CSV")
    p.add_argument("--out-dir", required=True, metavar="DIR")
    p.add_argument("--ship-types", metavar="LIST")
    p.add_argument("--days-per-round", type=int, default=None, dest="days_per_round")
    p.add_argument("--transport", choices=("tcp", "inprocess"), default=None)
    p.add_argument("--return-global", action="store_const", const=True,
                   default=None, dest="return_global")
    p.add_argument("--seed-from-global", action="store_const", const=True,
                   default=None, dest="seed_from_global")
    _add_config_flags(p)
    p.set_defaults(func=cmd_train_federated)

    p = sub.add_parser("serve", help="run the federation server over TCP")
    p.add_argument("--listen", default="127.0.0.1:7600", metavar="HOST:PORT")
    p.add_argument("--clients", type=int, required=True)
    p.add_argument("--rounds", type=int, help="round count (with --start-date)")
    p.add_argument("--return-global", action="store_const", const=True,
                   default=None, dest="return_global")
    p.add_argument("--ship-type", choices=SHIP_TYPES, default="cargo")
    p.add_argument("--plan", metavar="FILE",
                   help="round plan file, one YYYY-MM-DD/YYYY-MM-DD per line")
    p.add_argument("--start-date", metavar="DATE",
                   help="first training day (alternative to --plan)")
    p.add_argument("--days-per-round", type=int, default=None, dest="days_per_round")
    p.add_argument("--out", required=True, metavar="MODEL")
    p.add_argument("--ledger", metavar="CSV")
    _add_config_flags(p)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("client", help="join a federation server over TCP")
    p.add_argument("--connect", required=True, metavar="HOST:PORT")
    p.add_argument("--client-id", type=int, required=True)
    p.add_argument("--data", required=True, metavar="CSV")
    p.add_argument("--ship-type", choices=SHIP_TYPES, default="cargo")
    p.add_argument("--connect-retries", type=int, default=1)
    p.add_argument("--ledger", metavar="CSV")
    p.add_argument("--seed-from-global", action="store_const", const=True,
                   default=None, dest="seed_from_global")
    _add_config_flags(p)
    p.set_defaults(func=cmd_client)

    p = sub.add_parser("detect", help="score records against trained models")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--models", metavar="DIR",
                       help="directory of <type>.m3 files (auto-selected)")
    group.add_argument("--model", metavar="FILE", help="single model file")
    p.add_argument("--input", required=True, metavar="CSV")
    p.add_argument("--out", required=True, metavar="CSV")
    _add_config_flags(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("events", help="group anomalies into events")
    p.add_argument("--anomalies", required=True, metavar="CSV")
    p.add_argument("--out", required=True, metavar="CSV")
    p.add_argument("--max-gap", type=float, default=None,
                   help="seconds between records of one event (default 60)")
    p.add_argument("--figure", metavar="PNG")
    p.add_argument("--no-figure", action="store_true")
    _add_config_flags(p)
    p.set_defaults(func=cmd_events)

    p = sub.add_parser("compare", help="confusion counts between two runs")
    p.add_argument("--baseline", required=True, metavar="CSV")
    p.add_argument("--candidate", required=True, metavar="CSV")
    p.add_argument("--out", required=True, metavar="TXT")
    p.add_argument("--figure", metavar="PNG")
    p.add_argument("--no-figure", action="store_true")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("costs", help="communication cost report from a ledger")
    p.add_argument("--ledger", required=True, metavar="CSV")
    p.add_argument("--baseline-bytes", type=int,
                   help="raw training data size centralized training uploads")
    p.add_argument("--baseline-data", metavar="FILE",
                   help="measure the baseline from this file's size")
    p.add_argument("--out", required=True, metavar="TXT")
    p.add_argument("--figure", metavar="PNG")
    p.add_argument("--no-figure", action="store_true")
    p.set_defaults(func=cmd_costs)

    p = sub.add_parser("export-geojson", help="export map-ready GeoJSON")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--model", metavar="FILE")
    group.add_argument("--anomalies", metavar="CSV")
    p.add_argument("--group-events", action="store_true",
                   help="with --anomalies: export events instead of points")
    p.add_argument("--max-gap", type=float, default=None)
    p.add_argument("--out", required=True, metavar="GEOJSON")
    _add_config_flags(p)
    p.set_defaults(func=cmd_export_geojson)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, FederationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
