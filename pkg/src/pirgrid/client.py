"""Client connector: fan a query set out to n replicas and gather under a deadline."""

from __future__ import annotations

import asyncio
import os
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .chor import ChorResponse, chor_build_queries, chor_reconstruct
from .errors import (
    FrameError,
    IncompleteResponses,
    InsufficientResponses,
    NeedMultipleServers,
    PirError,
    ReplicaDivergence,
)
from .goldberg import (
    GoldbergResponse,
    RecoveryReport,
    default_threshold,
    goldberg_build_queries,
    goldberg_reconstruct,
)
from .specdb import DbGeometry, SpectrumKey, inv_index
from .wire import (
    CHOR_QUERY_OVERHEAD,
    GOLDBERG_QUERY_OVERHEAD,
    HEADER_SIZE,
    MsgType,
    WireMessage,
    encode_frame,
    pack_chor_query,
    pack_goldberg_query,
    read_frame,
    unpack_db_info,
    unpack_error,
)

PROTOCOLS = ("chor", "goldberg")


@dataclass(frozen=True)
class ServerEndpoint:
    server_id: int
    host: str
    port: int
    alpha: Optional[int] = None
    expected_digest: Optional[bytes] = None

    @property
    def evaluation_point(self) -> int:
        return self.alpha if self.alpha is not None else self.server_id + 1

    @classmethod
    def parse_list(cls, text: str) -> list["ServerEndpoint"]:
        """``"host:port,host:port,..."`` -> endpoints numbered from 0."""
        out = []
        for i, item in enumerate(x for x in text.split(",") if x.strip()):
            host, _, port = item.strip().rpartition(":")
            out.append(cls(i, host or "127.0.0.1", int(port)))
        return out


@dataclass
class ServerExchange:
    """Bytes and timing for one server; protocol bytes exclude all framing."""

    status: str = "absent"  # ok | absent | error | unreachable
    protocol_bytes_up: int = 0
    framing_bytes_up: int = 0
    protocol_bytes_down: int = 0
    framing_bytes_down: int = 0
    handshake_bytes: int = 0
    rtt: Optional[float] = None
    error: Optional[str] = None


@dataclass
class SessionMetrics:
    protocol: str
    n: int
    t: int
    r: int
    b: int
    per_server: dict = field(default_factory=dict)
    handshake_time: float = 0.0
    build_time: float = 0.0
    recovery_time: float = 0.0
    # client thread CPU seconds; immune to GIL waits from co-located servers
    build_cpu: float = 0.0
    recovery_cpu: float = 0.0
    elapsed: float = 0.0

    @property
    def k(self) -> int:
        return sum(1 for x in self.per_server.values() if x.status == "ok")

    @property
    def protocol_bytes_up(self) -> int:
        return sum(x.protocol_bytes_up for x in self.per_server.values())

    @property
    def protocol_bytes_down(self) -> int:
        return sum(x.protocol_bytes_down for x in self.per_server.values())

    @property
    def framing_bytes(self) -> int:
        return sum(x.framing_bytes_up + x.framing_bytes_down for x in self.per_server.values())

    @property
    def handshake_bytes(self) -> int:
        return sum(x.handshake_bytes for x in self.per_server.values())

    @property
    def protocol_bits(self) -> int:
        return 8 * (self.protocol_bytes_up + self.protocol_bytes_down)

    @property
    def rtts(self) -> list:
        return [x.rtt for x in self.per_server.values() if x.rtt is not None]


class _Conn:
    def __init__(self, endpoint: ServerEndpoint):
        self.endpoint = endpoint
        self.reader: Optional[asyncio.StreamReader] = None
        self.writer: Optional[asyncio.StreamWriter] = None
        self.geometry: Optional[DbGeometry] = None
        self.digest: Optional[bytes] = None
        self.exchange = ServerExchange()

    async def handshake(self, session_id: bytes) -> None:
        ep = self.endpoint
        self.reader, self.writer = await asyncio.open_connection(ep.host, ep.port)
        hello = encode_frame(WireMessage(MsgType.HELLO, session_id))
        self.writer.write(hello)
        await self.writer.drain()
        reply = await read_frame(self.reader)
        if reply.msg_type != MsgType.DB_INFO:
            raise FrameError("type", f"expected DB_INFO, got {reply.msg_type.name}")
        self.geometry, self.digest = unpack_db_info(reply.payload)
        self.exchange.handshake_bytes = len(hello) + HEADER_SIZE + len(reply.payload)

    async def exchange_query(self, frame: bytes, session_id: bytes) -> bytes:
        start = time.perf_counter()
        self.writer.write(frame)
        await self.writer.drain()
        reply = await read_frame(self.reader)
        self.exchange.rtt = time.perf_counter() - start
        if reply.session_id != session_id:
            raise FrameError("payload", "response for a different session")
        if reply.msg_type == MsgType.ERROR:
            code, message = unpack_error(reply.payload)
            raise _ServerError(f"server error {code}: {message}")
        if reply.msg_type != MsgType.RESPONSE:
            raise FrameError("type", f"expected RESPONSE, got {reply.msg_type.name}")
        self.exchange.protocol_bytes_down = len(reply.payload)
        self.exchange.framing_bytes_down = HEADER_SIZE
        return reply.payload

    async def close(self) -> None:
        if self.writer is not None:
            self.writer.close()
            try:
                await self.writer.wait_closed()
            except (ConnectionError, OSError):
                pass


class _ServerError(Exception):
    pass


async def private_fetch_async(key: SpectrumKey, endpoints: Sequence[ServerEndpoint], protocol: str = "goldberg",
                              t: Optional[int] = None, deadline: float = 5.0, rng=None,
                              connect_timeout: float = 5.0):
    """Retrieve the record for ``key`` without revealing it to any t servers.

    Returns ``(block, RecoveryReport, SessionMetrics)``.  ``deadline`` (seconds)
    bounds the wait for responses once every query is sent.  Recovery errors
    carry the session's metrics as ``exc.metrics``.
    """
    if protocol not in PROTOCOLS:
        raise ValueError(f"unknown protocol {protocol!r}")
    n = len(endpoints)
    if n < 2:
        raise NeedMultipleServers(f"need at least 2 servers, got {n}")
    if len({ep.server_id for ep in endpoints}) != n:
        raise ValueError("server ids must be unique")
    if protocol == "goldberg":
        t = default_threshold(n) if t is None else t
        if len({ep.evaluation_point for ep in endpoints}) != n:
            raise ValueError("evaluation points must be unique")
    else:
        t = n - 1

    started = time.perf_counter()
    session_id = os.urandom(8)
    conns = [_Conn(ep) for ep in endpoints]
    try:
        results = await asyncio.gather(
            *(asyncio.wait_for(c.handshake(session_id), connect_timeout) for c in conns),
            return_exceptions=True,
        )
        live = []
        for c, res in zip(conns, results):
            if isinstance(res, BaseException):
                c.exchange.status = "unreachable"
                c.exchange.error = repr(res)
            else:
                live.append(c)
        if not live:
            raise IncompleteResponses("no replica reachable") if protocol == "chor" else \
                InsufficientResponses("no replica reachable")
        _check_replicas(live)
        geo = live[0].geometry
        metrics = SessionMetrics(protocol, n, t, geo.record_count, geo.block_bytes,
                                 {c.endpoint.server_id: c.exchange for c in conns})
        metrics.handshake_time = time.perf_counter() - started

        beta = inv_index(key, geo)
        t0, c0 = time.perf_counter(), time.thread_time()
        frames = _build_frames(protocol, beta, n, t, geo.record_count, endpoints, rng, session_id, conns)
        metrics.build_time = time.perf_counter() - t0
        metrics.build_cpu = time.thread_time() - c0

        tasks = {asyncio.ensure_future(c.exchange_query(frames[i], session_id)): c
                 for i, c in enumerate(conns) if c in live}
        done, pending = await asyncio.wait(tasks, timeout=max(deadline, 0.0))
        for task in pending:
            task.cancel()
        payloads = {}
        for task in done:
            c = tasks[task]
            exc = task.exception()
            if exc is None:
                payloads[c.endpoint.server_id] = task.result()
                c.exchange.status = "ok"
            else:
                c.exchange.status = "absent" if isinstance(exc, (asyncio.IncompleteReadError, ConnectionError)) else "error"
                c.exchange.error = repr(exc)

        t0, c0 = time.perf_counter(), time.thread_time()
        try:
            block, report = _recover(protocol, payloads, endpoints, t, geo.block_bytes)
        except PirError as exc:
            _stamp_recovery(metrics, t0, c0, started)
            exc.metrics = metrics
            raise
        _stamp_recovery(metrics, t0, c0, started)
        return block, report, metrics
    finally:
        await asyncio.gather(*(c.close() for c in conns), return_exceptions=True)


def private_fetch(key: SpectrumKey, endpoints: Sequence[ServerEndpoint], protocol: str = "goldberg",
                  t: Optional[int] = None, deadline: float = 5.0, rng=None, connect_timeout: float = 5.0):
    """Blocking wrapper around :func:`private_fetch_async`."""
    return asyncio.run(private_fetch_async(key, endpoints, protocol, t, deadline, rng, connect_timeout))


async def describe_async(endpoints: Sequence[ServerEndpoint], connect_timeout: float = 5.0):
    """Handshake with every endpoint; returns the shared ``(geometry, digest)``.

    Raises ``OSError``/``asyncio.TimeoutError`` if any endpoint is unreachable
    and :class:`ReplicaDivergence` if replicas disagree.
    """
    conns = [_Conn(ep) for ep in endpoints]
    try:
        await asyncio.gather(*(asyncio.wait_for(c.handshake(bytes(8)), connect_timeout) for c in conns))
        _check_replicas(conns)
        return conns[0].geometry, conns[0].digest
    finally:
        await asyncio.gather(*(c.close() for c in conns), return_exceptions=True)


def describe(endpoints: Sequence[ServerEndpoint], connect_timeout: float = 5.0):
    return asyncio.run(describe_async(endpoints, connect_timeout))


def _stamp_recovery(metrics: SessionMetrics, t0: float, c0: float, started: float) -> None:
    metrics.recovery_time = time.perf_counter() - t0
    metrics.recovery_cpu = time.thread_time() - c0
    metrics.elapsed = time.perf_counter() - started


def _check_replicas(live: Sequence[_Conn]) -> None:
    ref = live[0]
    for c in live:
        if c.digest != ref.digest or c.geometry != ref.geometry:
            raise ReplicaDivergence(
                f"server {c.endpoint.server_id} digest {c.digest.hex()} != "
                f"server {ref.endpoint.server_id} digest {ref.digest.hex()}"
            )
        want = c.endpoint.expected_digest
        if want is not None and want != c.digest:
            raise ReplicaDivergence(f"server {c.endpoint.server_id} does not hold the expected database")


def _build_frames(protocol, beta, n, t, r, endpoints, rng, session_id, conns) -> list[bytes]:
    frames = []
    if protocol == "chor":
        qs = chor_build_queries(beta, n, r, rng)
        for share, c in zip(qs.shares, conns):
            packed = share.to_bytes()
            frames.append(encode_frame(WireMessage(MsgType.QUERY_CHOR, session_id, pack_chor_query(r, packed))))
            c.exchange.protocol_bytes_up = len(packed)
            c.exchange.framing_bytes_up = CHOR_QUERY_OVERHEAD
    else:
        alphas = [ep.evaluation_point for ep in endpoints]
        qs = goldberg_build_queries(beta, n, t, r, rng, alphas)
        for share, alpha, c in zip(qs.shares, qs.alphas, conns):
            raw = share.tobytes()
            frames.append(encode_frame(WireMessage(MsgType.QUERY_GOLDBERG, session_id,
                                                   pack_goldberg_query(alpha, raw))))
            c.exchange.protocol_bytes_up = len(raw)
            c.exchange.framing_bytes_up = GOLDBERG_QUERY_OVERHEAD
    return frames


def _recover(protocol, payloads, endpoints, t, b):
    ids = [ep.server_id for ep in endpoints]
    absent = frozenset(i for i in ids if i not in payloads)
    if protocol == "chor":
        if absent:
            raise IncompleteResponses(f"servers {sorted(absent)} did not answer; LP-Chor needs all {len(ids)}")
        responses = []
        for i in ids:
            block = np.frombuffer(payloads[i], dtype=np.uint8)
            responses.append(ChorResponse(i, block))
        block = chor_reconstruct(responses)
        return block.tobytes(), RecoveryReport(block, frozenset(ids), frozenset(), absent, "xor")
    malformed = frozenset(i for i, p in payloads.items() if len(p) != b)
    responses = [
        GoldbergResponse(ep.server_id, ep.evaluation_point, np.frombuffer(payloads[ep.server_id], dtype=np.uint8))
        for ep in endpoints
        if ep.server_id in payloads and ep.server_id not in malformed
    ]
    report = goldberg_reconstruct(responses, t, b, absent)
    if malformed:
        report = RecoveryReport(report.block, report.honest, report.byzantine | malformed, absent, report.method)
    return report.block.tobytes(), report
