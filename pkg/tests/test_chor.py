from itertools import combinations

import numpy as np
import pytest
from scipy import stats

from oracles import naive_xor_rows
from pirgrid.chor import ChorResponse, chor_build_queries, chor_reconstruct, chor_respond
from pirgrid.errors import IncompleteResponses, KeyOutOfRange, NeedMultipleServers, ShapeError
from pirgrid.field import BitVector
from pirgrid.specdb import DbGeometry, generate_synthetic


def _xor_all(shares):
    acc = BitVector.zeros(shares[0].length)
    for s in shares:
        acc = acc ^ s
    return acc


def test_shares_xor_to_unit_vector(rng):
    for n in (2, 3, 6):
        qs = chor_build_queries(37, n, 100, rng)
        assert qs.n == n
        assert all(s.length == 100 for s in qs.shares)
        assert _xor_all(qs.shares) == BitVector.unit(100, 37)


def test_build_rejects_bad_parameters(rng):
    with pytest.raises(NeedMultipleServers):
        chor_build_queries(0, 1, 8, rng)
    with pytest.raises(KeyOutOfRange):
        chor_build_queries(8, 2, 8, rng)


def test_two_server_share_is_uniform(rng):
    # n=2, r=8, beta=3: rho_1 uniform over 256 values and rho_2 = rho_1 ^ e_3
    counts = np.zeros(256)
    for _ in range(8000):
        qs = chor_build_queries(3, 2, 8, rng)
        v = qs.shares[0].to_bytes()[0]
        counts[v] += 1
        assert qs.shares[1].to_bytes()[0] == v ^ (1 << 3)
    assert stats.chisquare(counts).pvalue > 0.01


def test_respond_selects_rows(small_db):
    r = small_db.r
    for j in (0, 7, r - 1):
        resp = chor_respond(small_db, BitVector.unit(r, j))
        assert resp.block.tobytes() == small_db.row(j)
        assert resp.rows_touched == 1
    zero = chor_respond(small_db, BitVector.zeros(r))
    assert not zero.block.any() and zero.rows_touched == 0


def test_respond_matches_naive_oracle(rng):
    db = generate_synthetic(DbGeometry.flat(64, 12), 2)
    for _ in range(20):
        q = BitVector.random(64, rng)
        resp = chor_respond(db, q)
        assert resp.block.tolist() == naive_xor_rows(q.to_bools(), db.rows.tolist())
        assert resp.rows_touched == q.popcount()
        assert resp.table1_bound_bits == 64 * 12 * 8


def test_respond_shape_mismatch(small_db):
    with pytest.raises(ShapeError):
        chor_respond(small_db, BitVector.zeros(small_db.r + 1))


def test_end_to_end_every_row(small_db, rng):
    for beta in range(small_db.r):
        qs = chor_build_queries(beta, 3, small_db.r, rng)
        responses = [chor_respond(small_db, s, i) for i, s in enumerate(qs.shares)]
        assert chor_reconstruct(responses).tobytes() == small_db.row(beta)


def test_missing_response(small_db, rng):
    qs = chor_build_queries(4, 3, small_db.r, rng)
    responses = [chor_respond(small_db, s, i) for i, s in enumerate(qs.shares)]
    with pytest.raises(IncompleteResponses):
        chor_reconstruct(responses[:2], n=3)
    with pytest.raises(IncompleteResponses):
        chor_reconstruct([responses[0], None, responses[2]])


def test_corruption_goes_undetected(small_db, rng):
    qs = chor_build_queries(4, 3, small_db.r, rng)
    responses = [chor_respond(small_db, s, i) for i, s in enumerate(qs.shares)]
    bad = responses[1].block.copy()
    bad[0] ^= 0xFF
    responses[1] = ChorResponse(1, bad)
    out = chor_reconstruct(responses)
    # no exception: LP-Chor cannot notice a Byzantine server
    assert out.tobytes() != small_db.row(4)


def test_subset_marginals_independent_of_beta(rng):
    # any n-1 shares look the same whichever row is requested
    n, r, draws = 3, 16, 4000
    for subset in combinations(range(n), n - 1):
        tables = []
        for beta in (0, 9):
            counts = np.zeros(256)
            for _ in range(draws):
                qs = chor_build_queries(beta, n, r, rng)
                # first byte of the first share in the subset, second byte of the other
                a = qs.shares[subset[0]].to_bytes()[0]
                b = qs.shares[subset[1]].to_bytes()[1]
                counts[(a & 0xF0) | (b & 0x0F)] += 1
            tables.append(counts)
        assert stats.chi2_contingency(np.array(tables)).pvalue > 0.01
