"""Length-prefixed wire protocol between federation clients and server.

Frame layout, little-endian: payload length u32, message type u8, payload.
Owning the framing (instead of an RPC library) is what makes the byte
accounting in the cost ledger exact.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

from ..model import SHIP_TYPES

FRAME = struct.Struct("<IB")

MSG_HELLO = 0  # client_id u32, ship_type u8
MSG_TRAIN = 1  # round u32, chunk descriptor utf-8
MSG_CLIENT_MODEL = 2  # round u32, model bytes
MSG_GLOBAL_MODEL = 3  # round u32, model bytes
MSG_ROUND_DONE = 4  # round u32
MSG_FINISH = 5  # empty
MSG_ERROR = 6  # code u16, utf-8 text

MESSAGE_TYPES = (
    MSG_HELLO,
    MSG_TRAIN,
    MSG_CLIENT_MODEL,
    MSG_GLOBAL_MODEL,
    MSG_ROUND_DONE,
    MSG_FINISH,
    MSG_ERROR,
)

ERR_CONFIG_MISMATCH = 1
ERR_BAD_DESCRIPTOR = 2
ERR_CLIENT_FAILURE = 3
ERR_PROTOCOL = 4

_HELLO = struct.Struct("<IB")
_ROUND = struct.Struct("<I")
_ERR = struct.Struct("<H")


class ProtocolError(ValueError):
    """Malformed frame or message payload."""


@dataclass(frozen=True)
class Message:
    type: int
    round_no: int = 0
    client_id: int = 0
    ship_type: str = ""
    descriptor: str = ""
    model: bytes = b""
    code: int = 0
    text: str = ""


def hello(client_id: int, ship_type: str) -> Message:
    return Message(MSG_HELLO, client_id=client_id, ship_type=ship_type)


def train(round_no: int, descriptor: str) -> Message:
    return Message(MSG_TRAIN, round_no=round_no, descriptor=descriptor)


def client_model(round_no: int, model: bytes) -> Message:
    return Message(MSG_CLIENT_MODEL, round_no=round_no, model=model)


def global_model(round_no: int, model: bytes) -> Message:
    return Message(MSG_GLOBAL_MODEL, round_no=round_no, model=model)


def round_done(round_no: int) -> Message:
    return Message(MSG_ROUND_DONE, round_no=round_no)


def finish() -> Message:
    return Message(MSG_FINISH)


def error(code: int, text: str) -> Message:
    return Message(MSG_ERROR, code=code, text=text)


def encode(msg: Message) -> bytes:
    if msg.type == MSG_HELLO:
        payload = _HELLO.pack(msg.client_id, SHIP_TYPES.index(msg.ship_type))
    elif msg.type == MSG_TRAIN:
        payload = _ROUND.pack(msg.round_no) + msg.descriptor.encode("utf-8")
    elif msg.type in (MSG_CLIENT_MODEL, MSG_GLOBAL_MODEL):
        payload = _ROUND.pack(msg.round_no) + msg.model
    elif msg.type == MSG_ROUND_DONE:
        payload = _ROUND.pack(msg.round_no)
    elif msg.type == MSG_FINISH:
        payload = b""
    elif msg.type == MSG_ERROR:
        payload = _ERR.pack(msg.code) + msg.text.encode("utf-8")
    else:
        raise ProtocolError(f"unknown message type {msg.type}")
    return FRAME.pack(len(payload), msg.type) + payload


def decode(msg_type: int, payload: bytes) -> Message:
    try:
        if msg_type == MSG_HELLO:
            if len(payload) != _HELLO.size:
                raise ProtocolError("bad HELLO payload length")
            client_id, ship_code = _HELLO.unpack(payload)
            if ship_code >= len(SHIP_TYPES):
                raise ProtocolError(f"unknown ship type code {ship_code}")
            return hello(client_id, SHIP_TYPES[ship_code])
        if msg_type == MSG_TRAIN:
            (round_no,) = _ROUND.unpack_from(payload, 0)
            return train(round_no, payload[_ROUND.size :].decode("utf-8"))
        if msg_type in (MSG_CLIENT_MODEL, MSG_GLOBAL_MODEL):
            (round_no,) = _ROUND.unpack_from(payload, 0)
            msg = Message(msg_type, round_no=round_no, model=payload[_ROUND.size :])
            return msg
        if msg_type == MSG_ROUND_DONE:
            if len(payload) != _ROUND.size:
                raise ProtocolError("bad ROUND_DONE payload length")
            return round_done(_ROUND.unpack(payload)[0])
        if msg_type == MSG_FINISH:
            if payload:
                raise ProtocolError("FINISH carries no payload")
            return finish()
        if msg_type == MSG_ERROR:
            (code,) = _ERR.unpack_from(payload, 0)
            return error(code, payload[_ERR.size :].decode("utf-8"))
    except struct.error as exc:
        raise ProtocolError(f"short payload for message type {msg_type}") from exc
    raise ProtocolError(f"unknown message type {msg_type}")


def send_message(conn, msg: Message) -> int:
    """Write one frame; returns the exact number of bytes put on the wire."""
    data = encode(msg)
    conn.send(data)
    return len(data)


def recv_message(conn) -> tuple[Message, int]:
    """Read one frame; returns the message and its on-wire byte count."""
    header = conn.recv_exact(FRAME.size)
    length, msg_type = FRAME.unpack(header)
    payload = conn.recv_exact(length) if length else b""
    return decode(msg_type, payload), FRAME.size + length
