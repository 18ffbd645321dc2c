"""Closed-form communication costs for both protocols.

All formulas count protocol payload only: query shares up, answer blocks down.
``block_bytes`` is the record size in bytes; the formulas work in bits.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import NeedMultipleServers

WORD_BITS = 8

# published communication column of the comparison table, in KB
PUBLISHED_KB = {"chor": 753, "goldberg": 6000}


def chor_bits(r: int, block_bytes: int, n: int) -> int:
    """(r + b) * n with b in bits."""
    return (r + 8 * block_bytes) * n


def goldberg_bits(r: int, block_bytes: int, n: int, k: int, w: int = WORD_BITS) -> int:
    """r*w*n up, k*b down."""
    return r * w * n + k * 8 * block_bytes


def chor_wire_bits(r: int, block_bytes: int, n: int) -> int:
    """What actually crosses the wire: each share is padded to whole bytes."""
    return 8 * n * ((r + 7) // 8 + block_bytes)


@dataclass(frozen=True)
class Table0Line:
    protocol: str
    bits: int
    published_kb: int

    @property
    def bytes(self) -> int:
        return self.bits // 8

    @property
    def kb(self) -> float:
        return self.bytes / 1000

    @property
    def relative_deviation(self) -> float:
        return abs(self.kb - self.published_kb) / self.published_kb

    def __str__(self) -> str:
        return (f"{self.protocol:<9} {self.bits:>12,} bits = {self.bytes:>10,} bytes "
                f"({self.kb:,.2f} KB; published {self.published_kb} KB, deviation {self.relative_deviation:.3%})")


def account_table0(r: int = 10**6, block_bytes: int = 560, n: int = 6, k: int = 6,
                   w: int = WORD_BITS) -> list[Table0Line]:
    """Communication cost of one query at the comparison-table parameters.

    Nothing is materialized; the default database would be 560 MB.
    """
    if n < 2:
        raise NeedMultipleServers(f"multi-server PIR needs n >= 2, got {n}")
    return [
        Table0Line("LP-Chor", chor_bits(r, block_bytes, n), PUBLISHED_KB["chor"]),
        Table0Line("LP-Goldberg", goldberg_bits(r, block_bytes, n, k, w), PUBLISHED_KB["goldberg"]),
    ]
