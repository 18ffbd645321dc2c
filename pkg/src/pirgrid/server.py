"""Replica server answering PIR queries over the PIR1 frame protocol."""

from __future__ import annotations

import asyncio
import logging
import threading
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .chor import chor_respond
from .errors import FrameError, ShapeError
from .faults import FaultProfile
from .field import BitVector
from .goldberg import goldberg_respond
from .specdb import DatabaseMatrix, load_db
from .wire import (
    ErrorCode,
    MsgType,
    WireMessage,
    encode_frame,
    pack_db_info,
    pack_error,
    read_frame,
    unpack_chor_query,
    unpack_goldberg_query,
)

log = logging.getLogger(__name__)

ZERO_SESSION = bytes(8)


@dataclass
class ServerStats:
    queries: int = 0
    answered: int = 0
    dropped: int = 0
    corrupted: int = 0
    rows_touched: int = 0
    bytes_touched: int = 0


class ReplicaServer:
    """One database replica.  Safe to serve many connections at once."""

    def __init__(self, db: DatabaseMatrix, fault: FaultProfile | str = "none", seed: int = 0,
                 server_id: int = 0):
        self.db = db
        self.fault = FaultProfile.parse(fault) if isinstance(fault, str) else fault
        self.seed = seed
        self.server_id = server_id
        self.stats = ServerStats()
        self._lock = threading.Lock()
        self._answer_db = db
        if self.fault.mode == "stale-db":
            stale = load_db(self.fault.stale_path)
            if stale.geometry != db.geometry:
                raise ShapeError("stale database must share the live geometry")
            self._answer_db = stale
        self._server: Optional[asyncio.AbstractServer] = None
        self._handlers: set[asyncio.Task] = set()

    async def start(self, host: str = "127.0.0.1", port: int = 0) -> tuple[str, int]:
        self._server = await asyncio.start_server(self._handle, host, port)
        sock = self._server.sockets[0].getsockname()
        log.info("server %d listening on %s:%d (fault=%s)", self.server_id, sock[0], sock[1], self.fault)
        return sock[0], sock[1]

    async def close(self) -> None:
        if self._server is not None:
            self._server.close()
            await self._server.wait_closed()
        for task in list(self._handlers):
            task.cancel()
        if self._handlers:
            await asyncio.gather(*self._handlers, return_exceptions=True)

    def _next_rng(self) -> np.random.Generator:
        with self._lock:
            n = self.stats.queries
            self.stats.queries += 1
        return np.random.default_rng([self.seed, n])

    async def _handle(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter) -> None:
        task = asyncio.current_task()
        self._handlers.add(task)
        try:
            while True:
                try:
                    msg = await read_frame(reader)
                except asyncio.IncompleteReadError:
                    break
                except FrameError as exc:
                    log.warning("server %d: malformed frame (%s)", self.server_id, exc.category)
                    writer.write(encode_frame(WireMessage(MsgType.ERROR, ZERO_SESSION,
                                                          pack_error(ErrorCode.MALFORMED, str(exc)))))
                    await writer.drain()
                    break
                reply = await self._dispatch(msg)
                if reply is None:
                    # dropped query: the replica goes silent and hangs up
                    break
                writer.write(encode_frame(reply))
                await writer.drain()
        except (ConnectionError, asyncio.CancelledError):
            pass
        finally:
            self._handlers.discard(task)
            writer.close()
            try:
                await writer.wait_closed()
            except (ConnectionError, asyncio.CancelledError):
                pass

    async def _dispatch(self, msg: WireMessage) -> Optional[WireMessage]:
        sid = msg.session_id
        if msg.msg_type == MsgType.HELLO:
            return WireMessage(MsgType.DB_INFO, sid, pack_db_info(self.db.geometry, self.db.content_digest))
        if msg.msg_type not in (MsgType.QUERY_CHOR, MsgType.QUERY_GOLDBERG):
            return _error(sid, ErrorCode.UNSUPPORTED, f"unexpected message {msg.msg_type.name}")
        try:
            if msg.msg_type == MsgType.QUERY_CHOR:
                r, packed = unpack_chor_query(msg.payload)
                if r != self.db.r:
                    raise ShapeError(f"query for {r} rows, database has {self.db.r}")
                query = BitVector.from_bytes(packed, r)

                def compute(db):
                    resp = chor_respond(db, query, self.server_id)
                    return resp.block, resp.rows_touched, resp.rows_touched * db.b
            else:
                alpha, r, share = unpack_goldberg_query(msg.payload)
                if r != self.db.r or len(share) != r:
                    raise ShapeError(f"share of {len(share)} bytes for {r} rows, database has {self.db.r}")
                vec = np.frombuffer(share, dtype=np.uint8)

                def compute(db):
                    resp = goldberg_respond(db, vec, self.server_id, alpha)
                    return resp.words, db.r, resp.bytes_touched
        except (ShapeError, FrameError) as exc:
            return _error(sid, ErrorCode.SHAPE, str(exc))

        rng = self._next_rng()
        log.debug("server %d: %s session=%s payload=%d bytes", self.server_id,
                  msg.msg_type.name, sid.hex(), len(msg.payload))
        if self.fault.should_drop(rng):
            with self._lock:
                self.stats.dropped += 1
            return None
        if self.fault.kind == "delay":
            await asyncio.sleep(self.fault.delay_ms / 1000.0)

        loop = asyncio.get_running_loop()
        block, rows, touched = await loop.run_in_executor(None, compute, self._answer_db)
        corrupted = self.fault.corrupt(block, rng)
        with self._lock:
            self.stats.answered += 1
            self.stats.rows_touched += rows
            self.stats.bytes_touched += touched
            if self.fault.kind == "byzantine":
                self.stats.corrupted += 1
        return WireMessage(MsgType.RESPONSE, sid, corrupted.tobytes())


def _error(sid: bytes, code: ErrorCode, message: str) -> WireMessage:
    return WireMessage(MsgType.ERROR, sid, pack_error(code, message))


class LocalCluster:
    """n replica servers on loopback, driven by an event loop in a background thread.

    >>> with LocalCluster(db, faults=["none"] * 3) as cluster:
    ...     endpoints = cluster.endpoints
    """

    def __init__(self, db: DatabaseMatrix, n: Optional[int] = None,
                 faults: Optional[Sequence[FaultProfile | str]] = None, seed: int = 0,
                 host: str = "127.0.0.1"):
        if faults is None:
            faults = ["none"] * (n or 0)
        if n is not None and len(faults) != n:
            raise ValueError(f"{len(faults)} fault profiles for {n} servers")
        self.servers = [ReplicaServer(db, f, seed=seed + i, server_id=i) for i, f in enumerate(faults)]
        self.host = host
        self.addresses: list[tuple[str, int]] = []
        self._loop = asyncio.new_event_loop()
        self._thread = threading.Thread(target=self._loop.run_forever, name="pirgrid-cluster", daemon=True)

    def __enter__(self) -> "LocalCluster":
        self._thread.start()
        fut = asyncio.run_coroutine_threadsafe(self._start_all(), self._loop)
        self.addresses = fut.result(timeout=30)
        return self

    def __exit__(self, *exc) -> None:
        asyncio.run_coroutine_threadsafe(self._stop_all(), self._loop).result(timeout=30)
        self._loop.call_soon_threadsafe(self._loop.stop)
        self._thread.join(timeout=30)
        self._loop.close()

    async def _start_all(self):
        return [await s.start(self.host, 0) for s in self.servers]

    async def _stop_all(self):
        for s in self.servers:
            await s.close()

    @property
    def endpoints(self):
        from .client import ServerEndpoint

        return [ServerEndpoint(i, host, port) for i, (host, port) in enumerate(self.addresses)]


async def serve_forever(db_path: str, host: str, port: int, fault: str = "none", seed: int = 0,
                        server_id: int = 0, ready=None) -> None:
    db = load_db(db_path)
    server = ReplicaServer(db, fault, seed=seed, server_id=server_id)
    bound = await server.start(host, port)
    if ready is not None:
        ready(bound)
    try:
        await server._server.serve_forever()
    finally:
        await server.close()
