"""Byte-exact model serialization.

Little-endian throughout. Header carries the full model configuration so a
deserialized model is usable standalone; cells are written in ascending
(row, col) order and prototypes in stored order, which makes the encoding
canonical: equal models serialize to equal bytes.

Layout:
  header: magic "M3FM", version u16, ship_type u8, state_dims u8,
          origin_lon f64, origin_lat f64, cell_size f64, P u32, d_new f64,
          scales 4xf64, trained_records u64, cell_count u64
  cell:   row i32, col i32, proto_count u16
  proto:  count u64, mean 4xf64, m2 upper triangle 10xf64
"""

from __future__ import annotations

import struct

import numpy as np

from .model import (
    SHIP_TYPES,
    STATE_DIMS,
    Cell,
    GridConfig,
    ModelSpec,
    MovementModel,
    Prototype,
)

MAGIC = b"M3FM"
VERSION = 1

HEADER = struct.Struct("<4sHBBdddId4dQQ")
CELL = struct.Struct("<iiH")
PROTO = struct.Struct("<Q4d10d")

# Row-major upper triangle of the 4x4 co-deviation matrix.
TRIU = [(i, j) for i in range(STATE_DIMS) for j in range(i, STATE_DIMS)]

MODEL_SUFFIX = ".m3"


class CodecError(ValueError):
    """Raised for malformed or truncated model bytes."""


def serialize(model: MovementModel) -> bytes:
    spec = model.spec
    out = bytearray()
    out += HEADER.pack(
        MAGIC,
        VERSION,
        SHIP_TYPES.index(spec.ship_type),
        STATE_DIMS,
        spec.grid.origin_lon,
        spec.grid.origin_lat,
        spec.grid.cell_size,
        spec.max_prototypes,
        spec.d_new,
        *spec.scales,
        model.trained_records,
        len(model.cells),
    )
    for key in sorted(model.cells):
        cell = model.cells[key]
        if len(cell.prototypes) > 0xFFFF:
            raise CodecError("cell prototype count exceeds format limit")
        out += CELL.pack(key[0], key[1], len(cell.prototypes))
        for proto in cell.prototypes:
            triu = [proto.m2[i, j] for i, j in TRIU]
            out += PROTO.pack(proto.count, *proto.mean, *triu)
    return bytes(out)


def deserialize(data: bytes) -> MovementModel:
    if len(data) < HEADER.size:
        raise CodecError("truncated header")
    (
        magic,
        version,
        ship_code,
        state_dims,
        origin_lon,
        origin_lat,
        cell_size,
        max_prototypes,
        d_new,
        s_lon,
        s_lat,
        s_sog,
        s_cog,
        trained_records,
        cell_count,
    ) = HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise CodecError(f"bad magic {magic!r}")
    if version != VERSION:
        raise CodecError(f"unsupported version {version}")
    if state_dims != STATE_DIMS:
        raise CodecError(f"unsupported state dimensionality {state_dims}")
    if ship_code >= len(SHIP_TYPES):
        raise CodecError(f"unknown ship type code {ship_code}")
    spec = ModelSpec(
        grid=GridConfig(origin_lon, origin_lat, cell_size),
        ship_type=SHIP_TYPES[ship_code],
        max_prototypes=max_prototypes,
        d_new=d_new,
        scales=(s_lon, s_lat, s_sog, s_cog),
    )
    model = MovementModel.empty(spec)
    offset = HEADER.size
    for _ in range(cell_count):
        if offset + CELL.size > len(data):
            raise CodecError("truncated cell record")
        row, col, proto_count = CELL.unpack_from(data, offset)
        offset += CELL.size
        cell = Cell(index=(row, col))
        for _ in range(proto_count):
            if offset + PROTO.size > len(data):
                raise CodecError("truncated prototype record")
            values = PROTO.unpack_from(data, offset)
            offset += PROTO.size
            count = values[0]
            mean = np.array(values[1 : 1 + STATE_DIMS])
            m2 = np.zeros((STATE_DIMS, STATE_DIMS))
            for (i, j), v in zip(TRIU, values[1 + STATE_DIMS :]):
                m2[i, j] = v
                m2[j, i] = v
            cell.prototypes.append(Prototype(mean=mean, m2=m2, count=count))
        model.cells[(row, col)] = cell
    if offset != len(data):
        raise CodecError(f"{len(data) - offset} trailing bytes")
    model.trained_records = trained_records
    return model


def write_model(model: MovementModel, path) -> int:
    data = serialize(model)
    with open(path, "wb") as fh:
        fh.write(data)
    return len(data)


def read_model(path) -> MovementModel:
    with open(path, "rb") as fh:
        return deserialize(fh.read())
