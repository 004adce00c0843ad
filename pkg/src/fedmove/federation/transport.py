"""Reliable byte-stream transports: real TCP sockets and an in-process pair.

Both expose the same two calls (send, recv_exact) so the protocol layer and
the byte accounting cannot tell them apart; that is what makes the
tcp-versus-inprocess equivalence checks meaningful.
"""

from __future__ import annotations

import queue
import socket
import time


class TransportClosed(ConnectionError):
    """The peer went away before the expected bytes arrived."""


class TcpConnection:
    def __init__(self, sock: socket.socket):
        self._sock = sock
        self._sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)

    def send(self, data: bytes) -> None:
        try:
            self._sock.sendall(data)
        except OSError as exc:
            raise TransportClosed(str(exc)) from exc

    def recv_exact(self, n: int) -> bytes:
        buf = bytearray()
        while len(buf) < n:
            try:
                chunk = self._sock.recv(n - len(buf))
            except OSError as exc:
                raise TransportClosed(str(exc)) from exc
            if not chunk:
                raise TransportClosed("connection closed mid-message")
            buf += chunk
        return bytes(buf)

    def close(self) -> None:
        try:
            self._sock.close()
        except OSError:
            pass


class TcpListener:
    def __init__(self, host: str = "127.0.0.1", port: int = 0,
                 accept_timeout: float = 30.0):
        self._sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._sock.bind((host, port))
        self._sock.listen()
        self._sock.settimeout(accept_timeout)

    @property
    def address(self) -> tuple[str, int]:
        return self._sock.getsockname()[:2]

    def accept(self) -> TcpConnection:
        try:
            conn, _ = self._sock.accept()
        except socket.timeout as exc:
            raise TransportClosed("timed out waiting for a client") from exc
        return TcpConnection(conn)

    def close(self) -> None:
        self._sock.close()


def tcp_connect(host: str, port: int, retries: int = 1,
                delay_s: float = 0.2) -> TcpConnection:
    """Connect with a bounded retry (a failed attempt is retried once by
    default, matching the client-side transport policy)."""
    attempt = 0
    while True:
        try:
            return TcpConnection(socket.create_connection((host, port), timeout=30))
        except OSError:
            attempt += 1
            if attempt > retries:
                raise
            time.sleep(delay_s)


class InProcessConnection:
    """One endpoint of a queue-backed duplex stream."""

    def __init__(self, inbox: queue.Queue, outbox: queue.Queue):
        self._inbox = inbox
        self._outbox = outbox
        self._buffer = bytearray()
        self._closed = False
        self._eof = False

    def send(self, data: bytes) -> None:
        if self._closed:
            raise TransportClosed("connection closed")
        self._outbox.put(bytes(data))

    def recv_exact(self, n: int) -> bytes:
        while len(self._buffer) < n:
            if self._eof:
                raise TransportClosed("connection closed mid-message")
            chunk = self._inbox.get()
            if chunk is None:
                self._eof = True
                continue
            self._buffer += chunk
        out = bytes(self._buffer[:n])
        del self._buffer[:n]
        return out

    def close(self) -> None:
        if not self._closed:
            self._closed = True
            self._outbox.put(None)


def inprocess_pair() -> tuple[InProcessConnection, InProcessConnection]:
    a_to_b: queue.Queue = queue.Queue()
    b_to_a: queue.Queue = queue.Queue()
    return (
        InProcessConnection(inbox=b_to_a, outbox=a_to_b),
        InProcessConnection(inbox=a_to_b, outbox=b_to_a),
    )


class InProcessListener:
    """Accepts connections made by `connect()` from other threads."""

    def __init__(self, accept_timeout: float = 30.0):
        self._pending: queue.Queue = queue.Queue()
        self._timeout = accept_timeout
        self._closed = False

    def connect(self) -> InProcessConnection:
        if self._closed:
            raise TransportClosed("listener closed")
        client_end, server_end = inprocess_pair()
        self._pending.put(server_end)
        return client_end

    def accept(self) -> InProcessConnection:
        try:
            return self._pending.get(timeout=self._timeout)
        except queue.Empty as exc:
            raise TransportClosed("timed out waiting for a client") from exc

    def close(self) -> None:
        self._closed = True
