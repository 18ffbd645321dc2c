"""The replicated spectrum database: geometry, inverted index, SPDB files.

SPDB layout (all integers little-endian)::

    offset  size  field
    0       4     magic b"SPDB"
    4       2     version (1)
    6       2     reserved (0)
    8       8     record count r
    16      4     block bytes b
    20      4     grid_x
    24      4     grid_y
    28      4     channel count C
    32      4     time slots T
    36      8     generation seed
    44      16    BLAKE2b-128 digest of the r*b row bytes
    60      4     reserved (0)
    64      r*b   rows, row-major
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

from .errors import CorruptDatabase, KeyOutOfRange, ShapeError

MAGIC = b"SPDB"
VERSION = 1
HEADER = struct.Struct("<4sHHQIIIIIQ16sI")
assert HEADER.size == 64
DIGEST_SIZE = 16


@dataclass(frozen=True)
class DbGeometry:
    record_count: int
    block_bytes: int
    grid_x: int
    grid_y: int
    channel_count: int
    time_slots: int

    def __post_init__(self):
        if self.block_bytes < 1:
            raise ShapeError("block_bytes must be >= 1")
        if self.record_count < 2:
            raise ShapeError("record_count must be >= 2")
        dims = (self.grid_x, self.grid_y, self.channel_count, self.time_slots)
        if min(dims) < 1:
            raise ShapeError("grid, channel and slot counts must be >= 1")
        if self.grid_x * self.grid_y * self.channel_count * self.time_slots != self.record_count:
            raise ShapeError(
                f"record_count {self.record_count} != {self.grid_x}*{self.grid_y}*{self.channel_count}*{self.time_slots}"
            )

    @classmethod
    def build(cls, grid_x: int, grid_y: int, channels: int, slots: int, block_bytes: int) -> "DbGeometry":
        return cls(grid_x * grid_y * channels * slots, block_bytes, grid_x, grid_y, channels, slots)

    @classmethod
    def flat(cls, record_count: int, block_bytes: int) -> "DbGeometry":
        """A one-dimensional geometry: r latitude cells, one of everything else."""
        return cls(record_count, block_bytes, record_count, 1, 1, 1)

    @property
    def total_bytes(self) -> int:
        return self.record_count * self.block_bytes


@dataclass(frozen=True)
class SpectrumKey:
    x: int
    y: int
    channel: int
    time_slot: int


def inv_index(key: SpectrumKey, geo: DbGeometry) -> int:
    """Row index of ``key``: ((y*grid_x + x)*C + channel)*T + time_slot."""
    bounds = (
        ("x", key.x, geo.grid_x),
        ("y", key.y, geo.grid_y),
        ("channel", key.channel, geo.channel_count),
        ("time_slot", key.time_slot, geo.time_slots),
    )
    for name, value, limit in bounds:
        if not 0 <= value < limit:
            raise KeyOutOfRange(f"{name}={value} outside [0, {limit})")
    return ((key.y * geo.grid_x + key.x) * geo.channel_count + key.channel) * geo.time_slots + key.time_slot


def key_for_index(beta: int, geo: DbGeometry) -> SpectrumKey:
    """Inverse of :func:`inv_index`."""
    if not 0 <= beta < geo.record_count:
        raise KeyOutOfRange(f"row {beta} outside [0, {geo.record_count})")
    beta, slot = divmod(beta, geo.time_slots)
    beta, channel = divmod(beta, geo.channel_count)
    y, x = divmod(beta, geo.grid_x)
    return SpectrumKey(x, y, channel, slot)


def content_digest(rows: np.ndarray) -> bytes:
    return hashlib.blake2b(np.ascontiguousarray(rows).data, digest_size=DIGEST_SIZE).digest()


class DatabaseMatrix:
    """Immutable r x b matrix of record bytes."""

    def __init__(self, geometry: DbGeometry, rows: np.ndarray, seed: int = 0, digest: bytes | None = None):
        rows = np.asarray(rows, dtype=np.uint8)
        if rows.shape != (geometry.record_count, geometry.block_bytes):
            raise ShapeError(f"rows shape {rows.shape} does not match geometry")
        if rows.flags.writeable:
            rows = rows.copy()
            rows.setflags(write=False)
        self.geometry = geometry
        self.rows = rows
        self.seed = seed
        self.content_digest = digest if digest is not None else content_digest(rows)

    @property
    def r(self) -> int:
        return self.geometry.record_count

    @property
    def b(self) -> int:
        return self.geometry.block_bytes

    def row(self, beta: int) -> bytes:
        if not 0 <= beta < self.r:
            raise KeyOutOfRange(f"row {beta} outside [0, {self.r})")
        return self.rows[beta].tobytes()

    def lookup(self, key: SpectrumKey) -> bytes:
        return self.row(inv_index(key, self.geometry))

    def __repr__(self) -> str:
        return f"DatabaseMatrix(r={self.r}, b={self.b}, digest={self.content_digest.hex()})"


def generate_synthetic(geo: DbGeometry, seed: int) -> DatabaseMatrix:
    rng = np.random.Generator(np.random.PCG64(seed))
    rows = np.frombuffer(rng.bytes(geo.total_bytes), dtype=np.uint8).reshape(geo.record_count, geo.block_bytes)
    rows.setflags(write=False)
    return DatabaseMatrix(geo, rows, seed=seed)


def save_db(db: DatabaseMatrix, path: Union[str, Path]) -> None:
    g = db.geometry
    header = HEADER.pack(
        MAGIC, VERSION, 0, g.record_count, g.block_bytes, g.grid_x, g.grid_y,
        g.channel_count, g.time_slots, db.seed, db.content_digest, 0,
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(db.rows).data)


def read_header(path: Union[str, Path]) -> tuple[DbGeometry, int, bytes]:
    with open(path, "rb") as fh:
        raw = fh.read(HEADER.size)
    return _parse_header(raw)


def _parse_header(raw: bytes) -> tuple[DbGeometry, int, bytes]:
    if len(raw) < HEADER.size:
        raise CorruptDatabase("file shorter than the 64-byte header")
    magic, version, _, r, b, gx, gy, c, t, seed, digest, _ = HEADER.unpack(raw[: HEADER.size])
    if magic != MAGIC:
        raise CorruptDatabase(f"bad magic {magic!r}")
    if version != VERSION:
        raise CorruptDatabase(f"unsupported version {version}")
    try:
        geo = DbGeometry(r, b, gx, gy, c, t)
    except ShapeError as exc:
        raise CorruptDatabase(f"inconsistent geometry: {exc}") from exc
    return geo, seed, digest


def load_db(path: Union[str, Path], verify: bool = True) -> DatabaseMatrix:
    path = Path(path)
    size = path.stat().st_size
    geo, seed, digest = read_header(path)
    if size != HEADER.size + geo.total_bytes:
        raise CorruptDatabase(f"expected {HEADER.size + geo.total_bytes} bytes, file has {size}")
    rows = np.memmap(path, dtype=np.uint8, mode="r", offset=HEADER.size, shape=(geo.record_count, geo.block_bytes))
    if verify and content_digest(rows) != digest:
        raise CorruptDatabase("row digest does not match header")
    return DatabaseMatrix(geo, rows, seed=seed, digest=digest)
