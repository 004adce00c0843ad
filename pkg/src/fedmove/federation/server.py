"""Federation server: synchronous rounds with a full collection barrier.

Each round the server announces a training chunk, collects one model from
every client, and folds the previous global model together with the client
models. Aggregating the previous global model keeps history across rounds
even though each client trains from scratch per round.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass

from ..codec import CodecError, deserialize, serialize
from ..ingest import RoundPlan
from ..model import ModelSpec, MovementModel, aggregate, same_config
from . import protocol
from .ledger import CAT_CONTROL, CAT_MODEL, DIR_DOWN, DIR_UP, CostLedger
from .protocol import ProtocolError, recv_message
from .transport import TransportClosed

TRANSPORTS = ("tcp", "inprocess")


@dataclass(frozen=True)
class FederationConfig:
    n_clients: int = 1
    n_rounds: int = 1
    return_global: bool = False
    listen: str = "127.0.0.1:0"
    transport: str = "inprocess"

    def __post_init__(self):
        if self.n_clients < 1 or self.n_rounds < 1:
            raise ValueError("need at least one client and one round")
        if self.transport not in TRANSPORTS:
            raise ValueError(f"unknown transport {self.transport!r}")


class FederationError(RuntimeError):
    """Aborted run; carries the partial ledger and last completed model."""

    def __init__(self, message: str, ledger: CostLedger | None = None,
                 model: MovementModel | None = None):
        super().__init__(message)
        self.ledger = ledger
        self.model = model


def message_category(msg_type: int) -> str:
    if msg_type in (protocol.MSG_CLIENT_MODEL, protocol.MSG_GLOBAL_MODEL):
        return CAT_MODEL
    return CAT_CONTROL


class _Session:
    """Server-side view of one client connection.

    Only one thread touches a session at a time (the accept loop, then one
    worker per round), so the sequence counter needs no lock.
    """

    def __init__(self, conn, ledger: CostLedger):
        self.conn = conn
        self.ledger = ledger
        self.client_id = -1
        self._seq = 0

    def next_seq(self) -> int:
        seq = self._seq
        self._seq += 1
        return seq

    def send(self, msg: protocol.Message, round_no: int) -> None:
        n = protocol.send_message(self.conn, msg)
        self.ledger.record(round_no, DIR_DOWN, self.client_id,
                           message_category(msg.type), n, self.next_seq())

    def recv(self, round_no: int) -> protocol.Message:
        msg, n = recv_message(self.conn)
        self.ledger.record(round_no, DIR_UP, self.client_id,
                           message_category(msg.type), n, self.next_seq())
        return msg


def _round_worker(session: _Session, spec: ModelSpec, round_no: int,
                  descriptor: str, global_bytes: bytes | None,
                  results: dict, failures: dict) -> None:
    try:
        if global_bytes is not None:
            session.send(protocol.global_model(round_no, global_bytes), round_no)
        session.send(protocol.train(round_no, descriptor), round_no)
        msg = session.recv(round_no)
        if msg.type == protocol.MSG_ERROR:
            raise FederationError(
                f"client {session.client_id} failed: {msg.code} {msg.text}"
            )
        if msg.type != protocol.MSG_CLIENT_MODEL or msg.round_no != round_no:
            raise ProtocolError(
                f"expected CLIENT_MODEL for round {round_no}, got type {msg.type}"
            )
        model = deserialize(msg.model)
        if not same_config(model.spec, spec):
            try:
                session.send(
                    protocol.error(protocol.ERR_CONFIG_MISMATCH,
                                   "client model configuration does not match"),
                    round_no,
                )
            except TransportClosed:
                pass
            raise FederationError(
                f"client {session.client_id} sent a mismatched model configuration"
            )
        results[session.client_id] = model
    except (TransportClosed, ProtocolError, CodecError, FederationError) as exc:
        failures[session.client_id] = exc


def run_server(spec: ModelSpec, cfg: FederationConfig, plan: RoundPlan,
               listener) -> tuple[MovementModel, CostLedger]:
    """Serve one federated training run; returns the final model and ledger.

    Raises FederationError on any client failure; the exception carries the
    ledger so far and the last global model completed before the abort.
    """
    if plan.n_rounds != cfg.n_rounds:
        raise ValueError(
            f"plan has {plan.n_rounds} rounds but config expects {cfg.n_rounds}"
        )
    ledger = CostLedger()
    sessions: list[_Session] = []
    global_model = MovementModel.empty(spec)

    def abort(reason: str):
        for sess in sessions:
            try:
                sess.send(protocol.error(protocol.ERR_CLIENT_FAILURE, reason), 0)
            except TransportClosed:
                pass
        raise FederationError(reason, ledger=ledger, model=global_model)

    try:
        for _ in range(cfg.n_clients):
            try:
                conn = listener.accept()
                session = _Session(conn, ledger)
                msg, n = recv_message(conn)
            except (TransportClosed, ProtocolError) as exc:
                abort(f"client handshake failed: {exc}")
            if msg.type != protocol.MSG_HELLO:
                abort(f"expected HELLO, got message type {msg.type}")
            session.client_id = msg.client_id
            ledger.record(0, DIR_UP, msg.client_id, CAT_CONTROL, n,
                          session.next_seq())
            if msg.ship_type != spec.ship_type:
                try:
                    session.send(
                        protocol.error(protocol.ERR_CONFIG_MISMATCH,
                                       f"server trains {spec.ship_type}"), 0)
                except TransportClosed:
                    pass
                abort(f"client {msg.client_id} announced ship type "
                      f"{msg.ship_type!r}, expected {spec.ship_type!r}")
            if any(s.client_id == msg.client_id for s in sessions):
                abort(f"duplicate client id {msg.client_id}")
            sessions.append(session)
        sessions.sort(key=lambda s: s.client_id)

        for round_no in range(1, cfg.n_rounds + 1):
            descriptor = plan.descriptor(round_no)
            global_bytes = serialize(global_model) if cfg.return_global else None
            results: dict[int, MovementModel] = {}
            failures: dict[int, Exception] = {}
            workers = [
                threading.Thread(
                    target=_round_worker,
                    args=(sess, spec, round_no, descriptor, global_bytes,
                          results, failures),
                    name=f"round-{round_no}-client-{sess.client_id}",
                )
                for sess in sessions
            ]
            for w in workers:
                w.start()
            for w in workers:
                w.join()
            if failures:
                client_id, exc = sorted(failures.items())[0]
                abort(f"round {round_no} failed at client {client_id}: {exc}")
            # Deterministic input order: previous global first, then clients
            # by ascending id.
            global_model = aggregate(
                [global_model] + [results[s.client_id] for s in sessions]
            )
            for sess in sessions:
                sess.send(protocol.round_done(round_no), round_no)

        for sess in sessions:
            sess.send(protocol.finish(), 0)
        return global_model, ledger
    finally:
        for sess in sessions:
            sess.conn.close()
