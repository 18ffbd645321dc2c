"""LP-Goldberg: Shamir-shared selection vectors over GF(2^8)."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import InsufficientResponses, KeyOutOfRange, ShapeError, ThresholdError, TooManyServers
from .field import MUL, gf256_pow, random_bytes
from .sss import RecoveryVerdict, check_alphas, easy_recover, hard_recover
from .specdb import DatabaseMatrix


def default_alphas(n: int) -> list[int]:
    """Server i (0-based) evaluates at alpha = i + 1."""
    return list(range(1, n + 1))


def default_threshold(n: int) -> int:
    return max(1, (n - 1) // 2)


@dataclass(frozen=True, eq=False)
class GoldbergQuerySet:
    shares: tuple  # n uint8 arrays of length r
    alphas: tuple
    privacy_level: int
    target_beta: int

    @property
    def n(self) -> int:
        return len(self.shares)


@dataclass(frozen=True, eq=False)
class GoldbergResponse:
    server_id: int
    alpha: int
    words: np.ndarray
    bytes_touched: int = 0


@dataclass(frozen=True, eq=False)
class RecoveryReport:
    block: np.ndarray
    honest: frozenset
    byzantine: frozenset
    absent: frozenset = field(default_factory=frozenset)
    method: str = "easy"


def goldberg_build_queries(beta: int, n: int, t: int, r: int, rng=None,
                           alphas: Optional[Sequence[int]] = None) -> GoldbergQuerySet:
    if n > 255:
        raise TooManyServers(f"GF(2^8) has only 255 nonzero evaluation points, asked for {n}")
    if t < 1 or t >= n:
        raise ThresholdError(f"need 1 <= t < n, got t={t}, n={n}")
    if not 0 <= beta < r:
        raise KeyOutOfRange(f"row {beta} outside [0, {r})")
    alphas = list(alphas) if alphas is not None else default_alphas(n)
    if len(alphas) != n:
        raise ShapeError(f"{len(alphas)} evaluation points for {n} servers")
    check_alphas(alphas)
    # one independent degree-t polynomial per row; coeffs[d] holds x^(d+1) terms
    coeffs = random_bytes(rng, t * r).reshape(t, r)
    shares = []
    for a in alphas:
        share = np.zeros(r, dtype=np.uint8)
        share[beta] = 1
        for d in range(t):
            share ^= MUL[gf256_pow(a, d + 1)][coeffs[d]]
        share.setflags(write=False)
        shares.append(share)
    return GoldbergQuerySet(tuple(shares), tuple(alphas), t, beta)


def goldberg_respond(db: DatabaseMatrix, share, server_id: int = 0, alpha: int = 0) -> GoldbergResponse:
    """R[q] = sum_j share[j] * D[j, q] over GF(2^8).

    Rows are grouped by their share value and XOR-folded first, so each group
    costs one table-lookup pass instead of one per row.
    """
    share = np.asarray(share, dtype=np.uint8)
    if share.shape != (db.r,):
        raise ShapeError(f"share has shape {share.shape}, database has {db.r} rows")
    order = np.argsort(share, kind="stable")
    values = share[order]
    starts = np.flatnonzero(np.r_[True, values[1:] != values[:-1]])
    partial = np.bitwise_xor.reduceat(db.rows[order], starts, axis=0)
    out = np.zeros(db.b, dtype=np.uint8)
    for c, acc in zip(values[starts], partial):
        if c:
            out ^= MUL[c][acc]
    return GoldbergResponse(server_id, alpha, out, db.r * db.b)


def goldberg_reconstruct(responses: Sequence[GoldbergResponse], t: int, s: int,
                         absent: Sequence[int] = ()) -> RecoveryReport:
    """Easy recovery first; on any inconsistency fall through to hard recovery."""
    k = len(responses)
    if k <= t:
        raise InsufficientResponses(f"{k} responses, need more than t={t}")
    pairs = [(resp.alpha, resp.words) for resp in responses]
    verdict: RecoveryVerdict = easy_recover(t, pairs, s)
    method = "easy"
    if not verdict.recovered:
        verdict = hard_recover(t, pairs, s)
        method = "hard"
    ids = [resp.server_id for resp in responses]
    return RecoveryReport(
        verdict.block,
        frozenset(ids[i] for i in verdict.honest_set),
        frozenset(ids[i] for i in verdict.byzantine_set),
        frozenset(absent),
        method,
    )
