"""Arithmetic over GF(2) bit-vectors and GF(2^8).

GF(2^8) uses the reduction polynomial x^8 + x^4 + x^3 + x + 1 (0x11B) and
the generator 0x03.  Elements are plain ``int`` values 0..255; byte blocks
are ``numpy.uint8`` arrays.  Multiplication of whole arrays goes through the
256x256 product table ``MUL`` (64 KiB), scalar multiplication through the
log/antilog tables.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DivisionByZero, ShapeError

POLY = 0x11B
GENERATOR = 0x03


def _build_tables() -> tuple[list[int], list[int]]:
    exp = [0] * 510
    log = [0] * 256
    x = 1
    for i in range(255):
        exp[i] = x
        log[x] = i
        # multiply by the generator 0x03 = x + 1
        x2 = x << 1
        if x2 & 0x100:
            x2 ^= POLY
        x = x2 ^ x
    for i in range(255, 510):
        exp[i] = exp[i - 255]
    return exp, log


EXP, LOG = _build_tables()


def gf256_mul(a: int, b: int) -> int:
    if a == 0 or b == 0:
        return 0
    return EXP[LOG[a] + LOG[b]]


def gf256_inv(a: int) -> int:
    if a == 0:
        raise DivisionByZero("0x00 has no multiplicative inverse in GF(2^8)")
    return EXP[255 - LOG[a]]


def gf256_div(a: int, b: int) -> int:
    if b == 0:
        raise DivisionByZero("division by 0x00 in GF(2^8)")
    if a == 0:
        return 0
    return EXP[LOG[a] + 255 - LOG[b]]


def gf256_pow(a: int, e: int) -> int:
    if e == 0:
        return 1
    if a == 0:
        return 0
    return EXP[(LOG[a] * e) % 255]


def _build_mul_table() -> np.ndarray:
    exp = np.array(EXP, dtype=np.int64)
    log = np.array(LOG, dtype=np.int64)
    table = exp[log[:, None] + log[None, :]].astype(np.uint8)
    table[0, :] = 0
    table[:, 0] = 0
    return table


MUL = _build_mul_table()
MUL.setflags(write=False)
INV = np.array([0] + [gf256_inv(a) for a in range(1, 256)], dtype=np.uint8)
INV.setflags(write=False)


def scale(c: int, block: np.ndarray) -> np.ndarray:
    """Multiply every byte of ``block`` by the field element ``c``."""
    return MUL[c][block]


def poly_eval(coeffs: Sequence[int], x: int) -> int:
    """Horner evaluation; ``coeffs[i]`` is the coefficient of x^i."""
    acc = 0
    for c in reversed(coeffs):
        acc = gf256_mul(acc, x) ^ c
    return acc


def poly_normalize(coeffs: Sequence[int]) -> list[int]:
    out = list(coeffs)
    while out and out[-1] == 0:
        out.pop()
    return out


def poly_degree(coeffs: Sequence[int]) -> int:
    """Degree of the polynomial, -1 for the zero polynomial."""
    return len(poly_normalize(coeffs)) - 1


def xor_accumulate(acc, block):
    """Bytewise XOR of two equal-length blocks (bytes or uint8 arrays)."""
    a = np.frombuffer(acc, dtype=np.uint8) if isinstance(acc, (bytes, bytearray)) else np.asarray(acc, dtype=np.uint8)
    b = np.frombuffer(block, dtype=np.uint8) if isinstance(block, (bytes, bytearray)) else np.asarray(block, dtype=np.uint8)
    if a.shape != b.shape:
        raise ShapeError(f"cannot XOR blocks of length {a.size} and {b.size}")
    return np.bitwise_xor(a, b)


def xor_fold(blocks: Iterable, length: int) -> np.ndarray:
    acc = np.zeros(length, dtype=np.uint8)
    for block in blocks:
        acc = xor_accumulate(acc, block)
    return acc


class SystemRandom:
    """CSPRNG source exposing the ``bytes(n)`` method numpy Generators also have."""

    def bytes(self, n: int) -> bytes:
        return os.urandom(n)


def random_bytes(rng, n: int) -> np.ndarray:
    if rng is None:
        rng = SystemRandom()
    return np.frombuffer(rng.bytes(n), dtype=np.uint8)


@dataclass(frozen=True, eq=False)
class BitVector:
    """Packed bit-string of ``length`` bits stored as little-endian uint64 words.

    Bit ``j`` lives in word ``j // 64`` at position ``j % 64``.  Padding bits
    past ``length`` are always zero.
    """

    words: np.ndarray
    length: int

    def __post_init__(self):
        need = (self.length + 63) // 64
        if self.words.dtype != np.uint64 or self.words.shape != (need,):
            raise ShapeError(f"{self.length} bits need {need} uint64 words")
        self.words.setflags(write=False)

    @classmethod
    def zeros(cls, length: int) -> "BitVector":
        return cls(np.zeros((length + 63) // 64, dtype=np.uint64), length)

    @classmethod
    def unit(cls, length: int, index: int) -> "BitVector":
        if not 0 <= index < length:
            raise ShapeError(f"bit {index} outside a {length}-bit vector")
        words = np.zeros((length + 63) // 64, dtype=np.uint64)
        words[index // 64] = np.uint64(1) << np.uint64(index % 64)
        return cls(words, length)

    @classmethod
    def random(cls, length: int, rng=None) -> "BitVector":
        nwords = (length + 63) // 64
        words = random_bytes(rng, nwords * 8).view("<u8").astype(np.uint64)
        return cls(_mask_tail(words, length), length)

    @classmethod
    def from_bools(cls, bits) -> "BitVector":
        bits = np.asarray(bits, dtype=bool)
        length = bits.size
        packed = np.packbits(bits, bitorder="little")
        buf = np.zeros(((length + 63) // 64) * 8, dtype=np.uint8)
        buf[: packed.size] = packed
        return cls(buf.view("<u8").astype(np.uint64), length)

    @classmethod
    def from_bytes(cls, data: bytes, length: int) -> "BitVector":
        """Inverse of :meth:`to_bytes`; rejects wrong sizes and set padding bits."""
        if len(data) != (length + 7) // 8:
            raise ShapeError(f"{length} bits need {(length + 7) // 8} bytes, got {len(data)}")
        buf = np.zeros(((length + 63) // 64) * 8, dtype=np.uint8)
        buf[: len(data)] = np.frombuffer(data, dtype=np.uint8)
        words = buf.view("<u8").astype(np.uint64)
        if not np.array_equal(words, _mask_tail(words.copy(), length)):
            raise ShapeError("padding bits past the vector length are set")
        return cls(words, length)

    def to_bytes(self) -> bytes:
        return self.words.astype("<u8").tobytes()[: (self.length + 7) // 8]

    def to_bools(self) -> np.ndarray:
        raw = self.words.astype("<u8").view(np.uint8)
        return np.unpackbits(raw, bitorder="little")[: self.length].astype(bool)

    def popcount(self) -> int:
        return int(np.unpackbits(self.words.astype("<u8").view(np.uint8)).sum())

    def __xor__(self, other: "BitVector") -> "BitVector":
        if not isinstance(other, BitVector):
            return NotImplemented
        if other.length != self.length:
            raise ShapeError(f"cannot XOR {self.length}-bit and {other.length}-bit vectors")
        return BitVector(self.words ^ other.words, self.length)

    def __eq__(self, other) -> bool:
        if not isinstance(other, BitVector):
            return NotImplemented
        return self.length == other.length and np.array_equal(self.words, other.words)

    def __len__(self) -> int:
        return self.length

    def __getitem__(self, j: int) -> int:
        if not 0 <= j < self.length:
            raise IndexError(j)
        return int((int(self.words[j // 64]) >> (j % 64)) & 1)

    def __repr__(self) -> str:
        return f"BitVector(length={self.length}, popcount={self.popcount()})"


def _mask_tail(words: np.ndarray, length: int) -> np.ndarray:
    rem = length % 64
    if rem and words.size:
        words[-1] &= np.uint64((1 << rem) - 1)
    return words
