"""Federated training: wire protocol, transports, server, client, ledger."""

from __future__ import annotations

import threading

from ..ingest import RoundPlan
from ..model import ModelSpec, MovementModel
from .client import run_client
from .ledger import CostLedger, reduction_pct, summarize_costs
from .server import FederationConfig, FederationError, run_server
from .transport import InProcessListener, TcpListener, tcp_connect

__all__ = [
    "FederationConfig",
    "FederationError",
    "CostLedger",
    "run_server",
    "run_client",
    "run_federation",
    "reduction_pct",
    "summarize_costs",
]


def parse_listen(listen: str) -> tuple[str, int]:
    host, _, port = listen.rpartition(":")
    if not host:
        raise ValueError(f"listen address {listen!r} is not host:port")
    return host, int(port)


def run_federation(spec: ModelSpec, cfg: FederationConfig, plan: RoundPlan,
                   sources: dict, seed_from_global: bool = False):
    """Run server and all clients locally (threads) over the configured
    transport; returns (final model, server ledger, per-client ledgers).

    `sources` maps client ids to objects resolving chunk descriptors
    (see ingest.DailyDataSource).
    """
    if len(sources) != cfg.n_clients:
        raise ValueError(
            f"config expects {cfg.n_clients} clients, got {len(sources)} sources"
        )
    if cfg.transport == "tcp":
        host, port = parse_listen(cfg.listen)
        listener = TcpListener(host, port)
        addr = listener.address

        def connect():
            return tcp_connect(addr[0], addr[1], retries=3)
    else:
        listener = InProcessListener()
        connect = listener.connect

    server_box: dict = {}
    client_ledgers: dict[int, CostLedger] = {}
    client_errors: dict[int, Exception] = {}

    def server_main():
        try:
            server_box["result"] = run_server(spec, cfg, plan, listener)
        except Exception as exc:  # noqa: BLE001 - rethrown on the main thread
            server_box["error"] = exc

    def client_main(client_id: int, source):
        conn = None
        try:
            conn = connect()
            client_ledgers[client_id] = run_client(
                spec, client_id, source, conn, seed_from_global
            )
        except Exception as exc:  # noqa: BLE001 - rethrown on the main thread
            client_errors[client_id] = exc
        finally:
            if conn is not None:
                conn.close()

    threads = [threading.Thread(target=server_main, name="fed-server")]
    threads += [
        threading.Thread(target=client_main, args=(cid, src),
                         name=f"fed-client-{cid}")
        for cid, src in sorted(sources.items())
    ]
    for t in threads:
        t.start()
    for t in threads:
        t.join(timeout=300)
    listener.close()
    if any(t.is_alive() for t in threads):
        raise FederationError("federation run did not terminate")
    if "error" in server_box:
        raise server_box["error"]
    if client_errors:
        client_id, exc = sorted(client_errors.items())[0]
        raise FederationError(f"client {client_id} failed: {exc}") from exc
    model, ledger = server_box["result"]
    return model, ledger, client_ledgers
