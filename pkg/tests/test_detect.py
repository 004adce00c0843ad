import math
from datetime import datetime, timezone

import numpy as np
import pytest
from scipy import stats as scipy_stats

from fedmove.detect import (
    ANOMALY_COLUMNS,
    COVARIANCE_EPSILON,
    DIRECTION,
    NORMAL,
    POSITION,
    SPEED,
    AnomalyRecord,
    DetectionThresholds,
    ScoreReport,
    Scorer,
    chi2_sf_4dof,
    classify,
    detect_batch,
    read_anomaly_csv,
    two_sided_p,
    write_anomaly_csv,
)
from fedmove.ingest import AisRecord
from fedmove.model import Cell, MovementModel, Prototype
from helpers import make_spec


def unit_normalized_prototype(spec, key, sog=10.0, cog=45.0, count=1000):
    """Prototype whose scale-normalized covariance is exactly the identity."""
    lon, lat = spec.grid.cell_center(*key)
    mean = np.array([lon, lat, sog, cog])
    cov = np.diag(np.array(spec.scales) ** 2)
    return Prototype(mean=mean, m2=cov * count, count=count)


def single_prototype_model(spec=None, key=(0, 0)):
    spec = spec or make_spec()
    model = MovementModel.empty(spec)
    model.cells[key] = Cell(index=key,
                            prototypes=[unit_normalized_prototype(spec, key)])
    model.trained_records = 1000
    return model


def test_chi2_sf_4dof_matches_scipy():
    for x in np.linspace(0.001, 80.0, 400):
        assert chi2_sf_4dof(float(x)) == pytest.approx(
            scipy_stats.chi2.sf(x, df=4), rel=1e-10, abs=1e-300
        )
    assert chi2_sf_4dof(0.0) == 1.0
    assert chi2_sf_4dof(-3.0) == 1.0


def test_chi2_sf_4dof_one_percent_anchor():
    # chi-squared(4 dof) critical value for p = 0.01.
    assert chi2_sf_4dof(13.2767) == pytest.approx(0.01, abs=5e-6)


def test_two_sided_p_matches_scipy():
    for z in np.linspace(-8.0, 8.0, 321):
        assert two_sided_p(float(z)) == pytest.approx(
            2.0 * scipy_stats.norm.sf(abs(z)), rel=1e-10, abs=1e-300
        )
    assert two_sided_p(0.0) == 1.0


def test_two_sided_p_normal_anchor():
    # z = 2.5758 is the two-sided 1% point of the standard normal.
    assert two_sided_p(2.5758) == pytest.approx(0.01, abs=1e-5)


def test_scorer_exact_values_identity_covariance():
    spec = make_spec()
    model = single_prototype_model(spec)
    scorer = Scorer(model)
    proto = model.cells[(0, 0)].prototypes[0]
    offsets = np.array([1.0, -1.0, 0.5, 2.0])  # in units of scale
    x = proto.mean + offsets * np.array(spec.scales)
    report = scorer.score(x)
    assert report.matched
    assert report.prototype_ref == ((0, 0), 0)
    expected_d2 = float(np.dot(offsets, offsets)) / (1.0 + COVARIANCE_EPSILON)
    assert report.mahalanobis_sq == pytest.approx(expected_d2, rel=1e-9)
    assert report.p_value == pytest.approx(chi2_sf_4dof(expected_d2), rel=1e-12)
    expected_z = offsets / math.sqrt(1.0 + COVARIANCE_EPSILON)
    for got, z in zip(report.per_dim_p, expected_z):
        assert got == pytest.approx(two_sided_p(float(z)), rel=1e-12)


def test_scorer_on_mean_is_clean():
    model = single_prototype_model()
    report = Scorer(model).score(model.cells[(0, 0)].prototypes[0].mean.copy())
    assert report.matched
    assert report.mahalanobis_sq == pytest.approx(0.0, abs=1e-15)
    assert report.p_value == pytest.approx(1.0, abs=1e-12)


def test_scorer_wraps_course_delta():
    spec = make_spec()
    model = single_prototype_model(spec)
    proto = model.cells[(0, 0)].prototypes[0]
    x = proto.mean.copy()
    x[3] = (proto.mean[3] - 30.0 + 360.0) % 360.0  # one scale unit below, wrapped
    report = Scorer(model).score(x)
    assert report.mahalanobis_sq == pytest.approx(
        1.0 / (1.0 + COVARIANCE_EPSILON), rel=1e-9
    )


def test_scorer_searches_adjacent_cells_only():
    spec = make_spec()
    model = single_prototype_model(spec, key=(0, 0))
    scorer = Scorer(model)
    lon_next, lat_next = spec.grid.cell_center(0, 1)
    assert scorer.score(np.array([lon_next, lat_next, 10.0, 45.0])).matched
    lon_far, lat_far = spec.grid.cell_center(0, 2)
    report = scorer.score(np.array([lon_far, lat_far, 10.0, 45.0]))
    assert not report.matched
    assert report.prototype_ref is None
    assert report.p_value == 0.0


def test_scorer_picks_globally_nearest_neighbor():
    spec = make_spec()
    model = MovementModel.empty(spec)
    model.cells[(0, 0)] = Cell(
        index=(0, 0), prototypes=[unit_normalized_prototype(spec, (0, 0),
                                                            sog=20.0)]
    )
    model.cells[(0, 1)] = Cell(
        index=(0, 1), prototypes=[unit_normalized_prototype(spec, (0, 1),
                                                            sog=10.0)]
    )
    scorer = Scorer(model)
    # The record sits in cell (0,0) but moves at the neighbor's speed, so
    # the neighbor's prototype is nearer in normalized state space.
    lon, lat = spec.grid.cell_center(0, 0)
    report = scorer.score(np.array([lon + 0.4 * spec.grid.cell_size, lat,
                                    10.0, 45.0]))
    assert report.prototype_ref == ((0, 1), 0)


def test_thresholds_validation_and_joint():
    th = DetectionThresholds(pos=0.02, sog=0.01, cog=0.005)
    assert th.joint == 0.005
    assert th.for_dim(0) == 0.02
    assert th.for_dim(1) == 0.02
    assert th.for_dim(2) == 0.01
    assert th.for_dim(3) == 0.005
    with pytest.raises(ValueError):
        DetectionThresholds(pos=0.0)
    with pytest.raises(ValueError):
        DetectionThresholds(sog=1.5)


def full_report(p_joint=0.5, p_lon=0.5, p_lat=0.5, p_sog=0.5, p_cog=0.5):
    return ScoreReport(
        matched=True,
        prototype_ref=((0, 0), 0),
        mahalanobis_sq=1.0,
        p_value=p_joint,
        per_dim_p=(p_lon, p_lat, p_sog, p_cog),
    )


def test_classify_gate_logic():
    th = DetectionThresholds()
    assert classify(ScoreReport(matched=False), th) == POSITION
    assert classify(full_report(), th) == NORMAL
    assert classify(full_report(p_sog=0.001), th) == SPEED
    assert classify(full_report(p_cog=0.001), th) == DIRECTION
    assert classify(full_report(p_lat=0.001), th) == POSITION
    # Smallest offending dimension wins.
    assert classify(full_report(p_lon=0.002, p_cog=0.0005), th) == DIRECTION
    # Equal offenders: earlier dimension wins.
    assert classify(full_report(p_lon=0.001, p_sog=0.001), th) == POSITION


def test_classify_joint_only_failure():
    th = DetectionThresholds()
    report = full_report(p_joint=0.005, p_lon=0.3, p_lat=0.4, p_sog=0.02,
                         p_cog=0.2)
    # Every per-dimension test passes, the joint one does not: blame the
    # weakest dimension overall.
    assert classify(report, th) == SPEED


def test_classify_respects_per_group_thresholds():
    th = DetectionThresholds(pos=0.001, sog=0.05, cog=0.01)
    # 0.02 passes the position gate but would fail the speed gate.
    assert classify(full_report(p_lon=0.02, p_sog=0.02), th) == SPEED


def make_record(i=0, ship_type="cargo", **kw):
    spec = make_spec()
    lon, lat = spec.grid.cell_center(0, 0)
    defaults = dict(lon=lon, lat=lat, sog=10.0, cog=45.0)
    defaults.update(kw)
    return AisRecord(
        mmsi=219000000 + i,
        timestamp=datetime(2025, 7, 1, 6, 0, i, tzinfo=timezone.utc),
        ship_type=ship_type,
        **defaults,
    )


def test_detect_batch_skips_foreign_ship_types():
    model = single_prototype_model()
    records = [make_record(0), make_record(1, ship_type="tanker"),
               make_record(2, sog=40.0)]
    results, stats = detect_batch(model, records, DetectionThresholds())
    assert stats.scored == 2
    assert stats.skipped_other_type == 1
    assert [r.verdict for r in results] == [NORMAL, SPEED]
    assert results[0].record.mmsi == 219000000
    assert results[1].anomalous


def test_anomaly_csv_round_trip(tmp_path):
    model = single_prototype_model()
    records = [make_record(0), make_record(1, sog=40.0),
               make_record(2, lon=5.0, lat=5.0)]
    results, _ = detect_batch(model, records, DetectionThresholds())
    assert [r.verdict for r in results] == [NORMAL, SPEED, POSITION]
    path = tmp_path / "anomalies.csv"
    assert write_anomaly_csv(path, results) == 3
    rows = read_anomaly_csv(path)
    assert [r.verdict for r in rows] == [NORMAL, SPEED, POSITION]
    assert [r.mmsi for r in rows] == [219000000, 219000001, 219000002]
    assert rows[0].timestamp == records[0].timestamp
    assert rows[0].lon == records[0].lon
    assert rows[0].p_value == pytest.approx(results[0].report.p_value, rel=1e-15)
    # The unmatched record has no p-values at all.
    assert rows[2].p_value is None
    header = path.read_text(encoding="utf-8").splitlines()[0]
    assert header == ",".join(ANOMALY_COLUMNS)


def test_read_anomaly_csv_validates(tmp_path):
    good = tmp_path / "good.csv"
    good.write_text(
        ",".join(ANOMALY_COLUMNS)
        + "\n219000000,2025-07-01T06:00:00+00:00,11.0,57.0,10.0,45.0,weird,"
        "0.5,0.5,0.5,0.5,0.5\n",
        encoding="utf-8",
    )
    with pytest.raises(ValueError, match="unknown verdict"):
        read_anomaly_csv(good)
    bad = tmp_path / "bad.csv"
    bad.write_text("mmsi,timestamp\n1,2\n", encoding="utf-8")
    with pytest.raises(ValueError, match="missing anomaly columns"):
        read_anomaly_csv(bad)


def test_anomaly_record_anomalous_property():
    model = single_prototype_model()
    results, _ = detect_batch(model, [make_record(0)], DetectionThresholds())
    assert results[0].verdict == NORMAL
    assert not results[0].anomalous
