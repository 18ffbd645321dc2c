import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import brute_inverse, clmul_reduce, power_sum_eval
from pirgrid.errors import DivisionByZero, ShapeError
from pirgrid.field import (
    EXP,
    LOG,
    MUL,
    BitVector,
    gf256_inv,
    gf256_mul,
    poly_eval,
    xor_accumulate,
    xor_fold,
)

byte = st.integers(0, 255)
nonzero = st.integers(1, 255)


def test_mul_identities():
    assert gf256_mul(0x00, 0x57) == 0x00
    assert gf256_mul(0x01, 0x57) == 0x57
    # FIPS-197 worked example under the same modulus
    assert gf256_mul(0x57, 0x83) == 0xC1


def test_mul_exhaustive_against_shift_and_reduce():
    for a in range(256):
        for b in range(256):
            assert gf256_mul(a, b) == clmul_reduce(a, b)


def test_mul_table_matches_scalar_mul():
    expected = np.array([[clmul_reduce(a, b) for b in range(256)] for a in range(256)], dtype=np.uint8)
    assert np.array_equal(MUL, expected)
    assert MUL.nbytes == 65536


def test_log_antilog_tables():
    assert sorted(EXP[:255]) == list(range(1, 256))
    for a in range(1, 256):
        for b in range(1, 256, 7):
            assert EXP[(LOG[a] + LOG[b]) % 255] == clmul_reduce(a, b)


def test_inverse_exhaustive():
    assert gf256_inv(0x01) == 0x01
    for a in range(1, 256):
        inv = gf256_inv(a)
        assert inv == brute_inverse(a)
        assert gf256_mul(a, inv) == 1


def test_inverse_of_zero():
    with pytest.raises(DivisionByZero):
        gf256_inv(0)
    with pytest.raises(ZeroDivisionError):
        gf256_inv(0)


@given(byte, byte, byte)
def test_field_axioms(a, b, c):
    assert gf256_mul(a, b ^ c) == gf256_mul(a, b) ^ gf256_mul(a, c)
    assert gf256_mul(gf256_mul(a, b), c) == gf256_mul(a, gf256_mul(b, c))
    assert gf256_mul(a, b) == gf256_mul(b, a)
    assert a ^ a == 0


def test_poly_eval_examples():
    assert poly_eval([0x42], 0x99) == 0x42
    assert poly_eval([0x05, 0x01], 0x02) == 0x07


@given(st.lists(byte, min_size=4, max_size=4), st.lists(byte, min_size=8, max_size=8, unique=True))
def test_poly_eval_matches_power_sum(coeffs, xs):
    for x in xs:
        assert poly_eval(coeffs, x) == power_sum_eval(coeffs, x)


def test_xor_accumulate(rng):
    block = rng.integers(0, 256, 32, dtype=np.uint8)
    assert not xor_accumulate(block, block).any()
    assert np.array_equal(xor_accumulate(np.zeros(32, np.uint8), block), block)
    with pytest.raises(ShapeError):
        xor_accumulate(block, block[:-1])


def test_xor_fold_order_independent(rng):
    blocks = [rng.integers(0, 256, 16, dtype=np.uint8) for _ in range(9)]
    bits = rng.integers(0, 2, 9)
    chosen = [b for b, bit in zip(blocks, bits) if bit]
    forward = xor_fold(chosen, 16)
    backward = xor_fold(reversed(chosen), 16)
    shuffled = xor_fold([chosen[i] for i in rng.permutation(len(chosen))], 16)
    assert np.array_equal(forward, backward)
    assert np.array_equal(forward, shuffled)


@pytest.mark.parametrize("length", [1, 7, 8, 63, 64, 65, 1000])
def test_bitvector_roundtrips(length, rng):
    v = BitVector.random(length, rng)
    assert BitVector.from_bytes(v.to_bytes(), length) == v
    assert BitVector.from_bools(v.to_bools()) == v
    assert len(v.to_bytes()) == (length + 7) // 8
    assert v.popcount() == int(v.to_bools().sum())


@given(st.integers(1, 300), st.data())
def test_bitvector_xor_involution(length, data):
    seed = data.draw(st.integers(0, 2**32 - 1))
    g = np.random.default_rng(seed)
    x, y = BitVector.random(length, g), BitVector.random(length, g)
    assert (x ^ y) ^ y == x
    assert (x ^ x) == BitVector.zeros(length)


def test_bitvector_unit_and_padding():
    v = BitVector.unit(70, 69)
    assert v[69] == 1 and v.popcount() == 1
    with pytest.raises(ShapeError):
        BitVector.from_bytes(b"\xff", 3)
    with pytest.raises(ShapeError):
        BitVector.from_bytes(b"\x01\x00", 3)
    with pytest.raises(ShapeError):
        BitVector.zeros(8) ^ BitVector.zeros(9)
