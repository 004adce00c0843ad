"""Federation client: trains a fresh local model for every announced round."""

from __future__ import annotations

from ..codec import deserialize, serialize
from ..model import ModelSpec
from ..training import train_model
from . import protocol
from .ledger import DIR_DOWN, DIR_UP, CostLedger
from .protocol import recv_message, send_message
from .server import FederationError, message_category


def run_client(spec: ModelSpec, client_id: int, source, conn,
               seed_from_global: bool = False) -> CostLedger:
    """Participate in one federated run over an established connection.

    `source` resolves chunk descriptors to local records (records_for). The
    returned ledger is this client's own view of the exchanged bytes. By
    default every round trains from an empty model; with seed_from_global
    the most recently received global model is the starting point instead.
    """
    ledger = CostLedger()
    seq = 0

    def send(msg: protocol.Message, round_no: int) -> None:
        nonlocal seq
        n = send_message(conn, msg)
        ledger.record(round_no, DIR_UP, client_id, message_category(msg.type),
                      n, seq)
        seq += 1

    def recv() -> protocol.Message:
        nonlocal seq
        msg, n = recv_message(conn)
        ledger.record(msg.round_no, DIR_DOWN, client_id,
                      message_category(msg.type), n, seq)
        seq += 1
        return msg

    latest_global: bytes | None = None
    send(protocol.hello(client_id, spec.ship_type), 0)
    while True:
        msg = recv()
        if msg.type == protocol.MSG_TRAIN:
            try:
                records = source.records_for(msg.descriptor)
            except ValueError as exc:
                send(protocol.error(protocol.ERR_BAD_DESCRIPTOR, str(exc)),
                     msg.round_no)
                raise FederationError(
                    f"unresolvable chunk descriptor {msg.descriptor!r}",
                    ledger=ledger,
                ) from exc
            base = None
            if seed_from_global and latest_global is not None:
                base = deserialize(latest_global)
            model = train_model(spec, records, base=base)
            send(protocol.client_model(msg.round_no, serialize(model)),
                 msg.round_no)
        elif msg.type == protocol.MSG_GLOBAL_MODEL:
            latest_global = msg.model
        elif msg.type == protocol.MSG_ROUND_DONE:
            continue
        elif msg.type == protocol.MSG_FINISH:
            return ledger
        elif msg.type == protocol.MSG_ERROR:
            raise FederationError(
                f"server reported error {msg.code}: {msg.text}", ledger=ledger
            )
        else:
            raise FederationError(
                f"unexpected message type {msg.type} from server", ledger=ledger
            )
