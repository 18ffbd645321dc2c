"""Length-prefixed binary frames exchanged between clients and replica servers.

Frame header (17 bytes)::

    magic b"PIR1" | msg_type u8 | session_id 8 bytes | payload_len u32 LE

Payloads:

    HELLO           empty
    DB_INFO         r u64 | b u32 | grid_x u32 | grid_y u32 | C u32 | T u32 | digest 16 bytes
    QUERY_CHOR      r u32 | ceil(r/8) packed bits (bit j = byte j//8, bit j%8)
    QUERY_GOLDBERG  alpha u8 | r u32 | r share bytes
    RESPONSE        b block bytes
    ERROR           code u16 | UTF-8 message
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass

from .errors import FrameError
from .specdb import DbGeometry

MAGIC = b"PIR1"
HEADER = struct.Struct("<4sB8sI")
HEADER_SIZE = HEADER.size
MAX_PAYLOAD = 64 * 1024 * 1024

_DB_INFO = struct.Struct("<QIIIII16s")
_CHOR_PREFIX = struct.Struct("<I")
_GOLDBERG_PREFIX = struct.Struct("<BI")
_ERROR_PREFIX = struct.Struct("<H")


class MsgType(enum.IntEnum):
    HELLO = 0x01
    QUERY_CHOR = 0x02
    QUERY_GOLDBERG = 0x03
    RESPONSE = 0x04
    ERROR = 0x05
    DB_INFO = 0x06


class ErrorCode(enum.IntEnum):
    MALFORMED = 1
    SHAPE = 2
    UNSUPPORTED = 3
    INTERNAL = 4


@dataclass(frozen=True)
class WireMessage:
    msg_type: MsgType
    session_id: bytes
    payload: bytes = b""


def encode_frame(msg: WireMessage) -> bytes:
    if len(msg.session_id) != 8:
        raise FrameError("payload", "session_id must be 8 bytes")
    if len(msg.payload) > MAX_PAYLOAD:
        raise FrameError("length", f"payload of {len(msg.payload)} bytes exceeds 64 MiB")
    return HEADER.pack(MAGIC, int(msg.msg_type), msg.session_id, len(msg.payload)) + msg.payload


def decode_header(raw: bytes) -> tuple[MsgType, bytes, int]:
    if len(raw) < HEADER_SIZE:
        raise FrameError("truncated", f"header needs {HEADER_SIZE} bytes, got {len(raw)}")
    magic, mtype, session_id, length = HEADER.unpack(raw[:HEADER_SIZE])
    if magic != MAGIC:
        raise FrameError("magic", repr(magic))
    try:
        mtype = MsgType(mtype)
    except ValueError:
        raise FrameError("type", f"unknown message type 0x{mtype:02x}") from None
    if length > MAX_PAYLOAD:
        raise FrameError("length", f"declared payload {length} exceeds 64 MiB")
    return mtype, session_id, length


def decode_frame(data: bytes) -> WireMessage:
    """Decode exactly one frame; trailing or missing bytes are errors."""
    mtype, session_id, length = decode_header(data)
    if len(data) < HEADER_SIZE + length:
        raise FrameError("truncated", f"payload needs {length} bytes, got {len(data) - HEADER_SIZE}")
    if len(data) > HEADER_SIZE + length:
        raise FrameError("length", "trailing bytes after frame")
    return WireMessage(mtype, session_id, bytes(data[HEADER_SIZE:]))


async def read_frame(reader) -> WireMessage:
    raw = await reader.readexactly(HEADER_SIZE)
    mtype, session_id, length = decode_header(raw)
    payload = await reader.readexactly(length) if length else b""
    return WireMessage(mtype, session_id, payload)


# payload helpers ------------------------------------------------------------

def pack_db_info(geo: DbGeometry, digest: bytes) -> bytes:
    return _DB_INFO.pack(geo.record_count, geo.block_bytes, geo.grid_x, geo.grid_y,
                         geo.channel_count, geo.time_slots, digest)


def unpack_db_info(payload: bytes) -> tuple[DbGeometry, bytes]:
    if len(payload) != _DB_INFO.size:
        raise FrameError("payload", f"DB_INFO must be {_DB_INFO.size} bytes")
    r, b, gx, gy, c, t, digest = _DB_INFO.unpack(payload)
    try:
        return DbGeometry(r, b, gx, gy, c, t), digest
    except ValueError as exc:
        raise FrameError("payload", f"bad geometry: {exc}") from exc


def pack_chor_query(r: int, packed_bits: bytes) -> bytes:
    return _CHOR_PREFIX.pack(r) + packed_bits


def unpack_chor_query(payload: bytes) -> tuple[int, bytes]:
    if len(payload) < _CHOR_PREFIX.size:
        raise FrameError("payload", "QUERY_CHOR too short")
    (r,) = _CHOR_PREFIX.unpack_from(payload)
    return r, payload[_CHOR_PREFIX.size:]


def pack_goldberg_query(alpha: int, share: bytes) -> bytes:
    return _GOLDBERG_PREFIX.pack(alpha, len(share)) + share


def unpack_goldberg_query(payload: bytes) -> tuple[int, int, bytes]:
    if len(payload) < _GOLDBERG_PREFIX.size:
        raise FrameError("payload", "QUERY_GOLDBERG too short")
    alpha, r = _GOLDBERG_PREFIX.unpack_from(payload)
    return alpha, r, payload[_GOLDBERG_PREFIX.size:]


def pack_error(code: int, message: str) -> bytes:
    return _ERROR_PREFIX.pack(code) + message.encode("utf-8")


def unpack_error(payload: bytes) -> tuple[int, str]:
    if len(payload) < _ERROR_PREFIX.size:
        raise FrameError("payload", "ERROR too short")
    (code,) = _ERROR_PREFIX.unpack_from(payload)
    return code, payload[_ERROR_PREFIX.size:].decode("utf-8", errors="replace")


CHOR_QUERY_OVERHEAD = HEADER_SIZE + _CHOR_PREFIX.size
GOLDBERG_QUERY_OVERHEAD = HEADER_SIZE + _GOLDBERG_PREFIX.size
RESPONSE_OVERHEAD = HEADER_SIZE
