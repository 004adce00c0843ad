"""GeoJSON (RFC 7946) export of models, anomalies, and events."""

from __future__ import annotations

import json
from datetime import timezone

from .detect import NORMAL
from .model import COG, LAT, LON, SOG, MovementModel


def _collection(features: list) -> dict:
    return {"type": "FeatureCollection", "features": features}


def model_features(model: MovementModel) -> dict:
    """One Point per prototype, sized by its training support downstream."""
    features = []
    for key in sorted(model.cells):
        cell = model.cells[key]
        for proto in cell.prototypes:
            features.append(
                {
                    "type": "Feature",
                    "geometry": {
                        "type": "Point",
                        "coordinates": [float(proto.mean[LON]),
                                        float(proto.mean[LAT])],
                    },
                    "properties": {
                        "count": int(proto.count),
                        "mean_sog": float(proto.mean[SOG]),
                        "mean_cog": float(proto.mean[COG]),
                        "cell_row": key[0],
                        "cell_col": key[1],
                    },
                }
            )
    return _collection(features)


def anomaly_features(rows) -> dict:
    """Anomalous records as Points; normal rows are left out."""
    features = []
    for row in rows:
        if row.verdict == NORMAL:
            continue
        features.append(
            {
                "type": "Feature",
                "geometry": {
                    "type": "Point",
                    "coordinates": [row.lon, row.lat],
                },
                "properties": {
                    "mmsi": row.mmsi,
                    "timestamp": row.timestamp.astimezone(timezone.utc).isoformat(),
                    "verdict": row.verdict,
                    "p_value": row.p_value,
                },
            }
        )
    return _collection(features)


def event_features(events) -> dict:
    """Events as LineStrings along their records.

    RFC 7946 requires two or more positions in a LineString, so an event
    with a single record becomes a Point.
    """
    features = []
    for ev in events:
        coords = [[rec.lon, rec.lat] for rec in ev.records]
        if len(coords) >= 2:
            geometry = {"type": "LineString", "coordinates": coords}
        else:
            geometry = {"type": "Point", "coordinates": coords[0]}
        features.append(
            {
                "type": "Feature",
                "geometry": geometry,
                "properties": {
                    "mmsi": ev.mmsi,
                    "duration_s": ev.duration_s,
                    "main_type": ev.main_type,
                    "n_records": ev.n_records,
                },
            }
        )
    return _collection(features)


def write_geojson(path, collection: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(collection, fh, indent=2)
        fh.write("\n")
