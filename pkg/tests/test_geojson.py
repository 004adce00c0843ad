import json
from datetime import datetime, timedelta, timezone

import numpy as np

from fedmove.detect import DIRECTION, NORMAL, POSITION, SPEED, ScoredRow
from fedmove.events import group_events
from fedmove.geojson import (
    anomaly_features,
    event_features,
    model_features,
    write_geojson,
)
from fedmove.model import Cell, MovementModel, Prototype
from helpers import make_spec

T0 = datetime(2025, 7, 1, 12, 0, 0, tzinfo=timezone.utc)


def scored(mmsi, offset_s, verdict, lon=11.5, lat=57.5):
    return ScoredRow(
        mmsi=mmsi,
        timestamp=T0 + timedelta(seconds=offset_s),
        lon=lon,
        lat=lat,
        sog=10.0,
        cog=90.0,
        verdict=verdict,
        p_value=0.001 if verdict != NORMAL else 0.5,
    )


def small_model():
    spec = make_spec()
    model = MovementModel.empty(spec)
    p1 = Prototype(mean=np.array([11.5, 57.5, 10.0, 90.0]),
                   m2=np.eye(4) * 3.0, count=3)
    p2 = Prototype(mean=np.array([11.51, 57.5, 12.0, 85.0]),
                   m2=np.eye(4) * 2.0, count=2)
    model.cells[(0, 0)] = Cell(index=(0, 0), prototypes=[p1])
    model.cells[(0, 1)] = Cell(index=(0, 1), prototypes=[p2])
    model.trained_records = 5
    return model


def test_model_features():
    fc = model_features(small_model())
    assert fc["type"] == "FeatureCollection"
    assert len(fc["features"]) == 2
    first = fc["features"][0]
    assert first["geometry"] == {"type": "Point", "coordinates": [11.5, 57.5]}
    assert first["properties"] == {
        "count": 3,
        "mean_sog": 10.0,
        "mean_cog": 90.0,
        "cell_row": 0,
        "cell_col": 0,
    }
    # Cells come out in sorted index order.
    cols = [f["properties"]["cell_col"] for f in fc["features"]]
    assert cols == [0, 1]


def test_anomaly_features_skip_normal_rows():
    rows = [
        scored(1, 0, NORMAL),
        scored(1, 60, SPEED, lon=11.6),
        scored(2, 0, POSITION, lat=57.6),
    ]
    fc = anomaly_features(rows)
    assert len(fc["features"]) == 2
    speed_feat, pos_feat = fc["features"]
    assert speed_feat["geometry"]["coordinates"] == [11.6, 57.5]
    assert speed_feat["properties"]["verdict"] == SPEED
    assert speed_feat["properties"]["mmsi"] == 1
    assert speed_feat["properties"]["timestamp"] == "2025-07-01T12:01:00+00:00"
    assert speed_feat["properties"]["p_value"] == 0.001
    assert pos_feat["properties"]["verdict"] == POSITION


def test_event_features_linestring_and_point():
    rows = [
        scored(1, 0, SPEED, lon=11.50),
        scored(1, 30, SPEED, lon=11.51),
        scored(1, 60, DIRECTION, lon=11.52),
        scored(2, 0, POSITION),
    ]
    events = group_events(rows)
    fc = event_features(events)
    assert len(fc["features"]) == 2
    line, point = fc["features"]
    assert line["geometry"]["type"] == "LineString"
    assert line["geometry"]["coordinates"] == [
        [11.50, 57.5], [11.51, 57.5], [11.52, 57.5],
    ]
    assert line["properties"]["mmsi"] == 1
    assert line["properties"]["duration_s"] == 60.0
    assert line["properties"]["n_records"] == 3
    assert line["properties"]["main_type"] == SPEED
    assert point["geometry"]["type"] == "Point"
    assert point["geometry"]["coordinates"] == [11.5, 57.5]
    assert point["properties"]["n_records"] == 1


def test_write_geojson_round_trip(tmp_path):
    path = tmp_path / "model.geojson"
    fc = model_features(small_model())
    write_geojson(path, fc)
    text = path.read_text(encoding="utf-8")
    assert text.endswith("\n")
    assert json.loads(text) == fc


def test_empty_collections():
    assert model_features(MovementModel.empty(make_spec()))["features"] == []
    assert anomaly_features([])["features"] == []
    assert event_features([])["features"] == []
