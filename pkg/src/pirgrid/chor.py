"""LP-Chor: XOR-shared selection vectors over GF(2)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import IncompleteResponses, KeyOutOfRange, NeedMultipleServers, ShapeError
from .field import BitVector
from .specdb import DatabaseMatrix


@dataclass(frozen=True)
class ChorQuerySet:
    shares: tuple
    target_beta: int

    @property
    def n(self) -> int:
        return len(self.shares)


@dataclass(frozen=True, eq=False)
class ChorResponse:
    server_id: int
    block: np.ndarray
    rows_touched: int = 0
    # the cost model charges the server |D| XORs regardless of the query bits
    table1_bound_bits: int = 0


def chor_build_queries(beta: int, n: int, r: int, rng=None) -> ChorQuerySet:
    if n < 2:
        raise NeedMultipleServers(f"LP-Chor needs at least 2 servers, got {n}")
    if not 0 <= beta < r:
        raise KeyOutOfRange(f"row {beta} outside [0, {r})")
    shares = [BitVector.random(r, rng) for _ in range(n - 1)]
    last = BitVector.unit(r, beta)
    for s in shares:
        last = last ^ s
    shares.append(last)
    return ChorQuerySet(tuple(shares), beta)


def chor_respond(db: DatabaseMatrix, query: BitVector, server_id: int = 0) -> ChorResponse:
    if query.length != db.r:
        raise ShapeError(f"query has {query.length} bits, database has {db.r} rows")
    mask = query.to_bools()
    selected = db.rows[mask]
    if selected.shape[0]:
        block = np.bitwise_xor.reduce(selected, axis=0)
    else:
        block = np.zeros(db.b, dtype=np.uint8)
    return ChorResponse(server_id, block, int(selected.shape[0]), db.r * db.b * 8)


def chor_reconstruct(responses: Sequence[Optional[ChorResponse]], n: Optional[int] = None) -> np.ndarray:
    """XOR all n responses together.

    ``None`` entries mark servers that never answered.  Pass ``n`` when the
    list may be shorter than the server count.
    """
    present = [resp for resp in responses if resp is not None]
    expected = n if n is not None else len(responses)
    if not present or len(present) < expected:
        raise IncompleteResponses(f"LP-Chor needs all {expected} responses, got {len(present)}")
    length = present[0].block.size
    acc = np.zeros(length, dtype=np.uint8)
    for resp in present:
        if resp.block.size != length:
            raise ShapeError("responses have different block lengths")
        acc ^= resp.block
    return acc
