import numpy as np
import pytest

from fedmove.codec import (
    CELL,
    HEADER,
    MAGIC,
    MODEL_SUFFIX,
    PROTO,
    CodecError,
    deserialize,
    read_model,
    serialize,
    write_model,
)
from fedmove.model import SHIP_TYPES, Cell, MovementModel, Prototype
from helpers import make_spec, models_equal, random_model


def test_frozen_record_sizes():
    assert HEADER.size == 92
    assert CELL.size == 10
    assert PROTO.size == 120


def test_empty_model_is_header_only():
    data = serialize(MovementModel.empty(make_spec()))
    assert len(data) == 92
    assert data[:4] == MAGIC


def test_single_prototype_payload_size():
    model = MovementModel.empty(make_spec())
    model.update([0.005, 0.005, 10.0, 45.0])
    assert len(serialize(model)) == 92 + 10 + 120


def test_round_trip_trained_model():
    spec = make_spec(origin_lon=10.0, origin_lat=55.0, ship_type="tanker")
    model = MovementModel.empty(spec)
    rng = np.random.default_rng(5)
    for _ in range(300):
        model.update([
            10.0 + rng.uniform(0, 0.1),
            55.0 + rng.uniform(0, 0.1),
            rng.uniform(5, 15),
            rng.uniform(30, 60),
        ])
    assert models_equal(deserialize(serialize(model)), model)


def test_round_trip_random_models():
    rng = np.random.default_rng(17)
    for _ in range(20):
        model = random_model(rng)
        assert models_equal(deserialize(serialize(model)), model)


def test_round_trip_every_ship_type():
    for ship_type in SHIP_TYPES:
        model = MovementModel.empty(make_spec(ship_type=ship_type))
        out = deserialize(serialize(model))
        assert out.spec.ship_type == ship_type


def test_serialization_is_canonical():
    spec = make_spec()
    a = MovementModel.empty(spec)
    b = MovementModel.empty(spec)
    points = [
        [0.005, 0.005, 10.0, 45.0],
        [0.055, 0.005, 11.0, 45.0],
        [-0.045, 0.005, 12.0, 45.0],
    ]
    # Same cells created in opposite orders serialize identically.
    for x in points:
        a.update(x)
    for x in reversed(points):
        b.update(x)
    b.trained_records = a.trained_records
    assert serialize(a) == serialize(b)


def test_spec_survives_round_trip_exactly():
    spec = make_spec(
        origin_lon=11.1234567890123,
        origin_lat=57.9876543210987,
        cell_size=0.015625,
        ship_type="passenger",
        max_prototypes=13,
        d_new=2.5,
        scales=(0.015625, 0.03125, 1.75, 22.5),
    )
    out = deserialize(serialize(MovementModel.empty(spec)))
    assert out.spec == spec


def test_rejects_bad_magic():
    data = bytearray(serialize(MovementModel.empty(make_spec())))
    data[:4] = b"XXXX"
    with pytest.raises(CodecError, match="magic"):
        deserialize(bytes(data))


def test_rejects_bad_version():
    data = bytearray(serialize(MovementModel.empty(make_spec())))
    data[4] = 99
    with pytest.raises(CodecError, match="version"):
        deserialize(bytes(data))


def test_rejects_bad_ship_code():
    data = bytearray(serialize(MovementModel.empty(make_spec())))
    data[6] = 7
    with pytest.raises(CodecError, match="ship type"):
        deserialize(bytes(data))


def test_rejects_bad_state_dims():
    data = bytearray(serialize(MovementModel.empty(make_spec())))
    data[7] = 3
    with pytest.raises(CodecError, match="dimensionality"):
        deserialize(bytes(data))


def test_rejects_truncation_everywhere():
    model = MovementModel.empty(make_spec())
    model.update([0.005, 0.005, 10.0, 45.0])
    model.update([0.095, 0.005, 10.0, 45.0])
    data = serialize(model)
    for cut in (10, 91, 95, 101, 150, len(data) - 1):
        with pytest.raises(CodecError, match="truncated"):
            deserialize(data[:cut])


def test_rejects_trailing_bytes():
    data = serialize(MovementModel.empty(make_spec()))
    with pytest.raises(CodecError, match="trailing"):
        deserialize(data + b"\x00")


def test_rejects_prototype_count_overflow():
    model = MovementModel.empty(make_spec())
    proto = Prototype(mean=np.zeros(4), m2=np.zeros((4, 4)), count=1)
    model.cells[(0, 0)] = Cell(index=(0, 0), prototypes=[proto] * 0x10000)
    with pytest.raises(CodecError, match="format limit"):
        serialize(model)


def test_write_read_model_file(tmp_path):
    rng = np.random.default_rng(23)
    model = random_model(rng)
    path = tmp_path / f"cargo{MODEL_SUFFIX}"
    n_bytes = write_model(model, path)
    assert path.stat().st_size == n_bytes
    assert models_equal(read_model(path), model)
