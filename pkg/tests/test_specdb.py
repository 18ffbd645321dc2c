import numpy as np
import pytest

from oracles import all_keys
from pirgrid.errors import CorruptDatabase, KeyOutOfRange, ShapeError
from pirgrid.specdb import (
    DbGeometry,
    SpectrumKey,
    content_digest,
    generate_synthetic,
    inv_index,
    key_for_index,
    load_db,
    save_db,
)

GEO = DbGeometry.build(4, 4, 3, 2, 16)


def test_geometry_invariants():
    assert GEO.record_count == 96
    with pytest.raises(ShapeError):
        DbGeometry(95, 16, 4, 4, 3, 2)
    with pytest.raises(ShapeError):
        DbGeometry.build(1, 1, 1, 1, 8)  # r = 1
    with pytest.raises(ShapeError):
        DbGeometry.build(2, 2, 1, 1, 0)


def test_inv_index_endpoints():
    assert inv_index(SpectrumKey(0, 0, 0, 0), GEO) == 0
    assert inv_index(SpectrumKey(3, 3, 2, 1), GEO) == 95


def test_inv_index_bijective():
    seen = sorted(inv_index(SpectrumKey(*k), GEO) for k in all_keys(4, 4, 3, 2))
    assert seen == list(range(96))


def test_inv_index_bijective_large():
    geo = DbGeometry.build(25, 20, 10, 20, 1)  # r = 10^5
    keys = np.array(list(all_keys(25, 20, 10, 20)))
    idx = ((keys[:, 1] * 25 + keys[:, 0]) * 10 + keys[:, 2]) * 20 + keys[:, 3]
    assert np.array_equal(np.sort(idx), np.arange(geo.record_count))
    for beta in (0, 1, 12345, 99999):
        assert inv_index(key_for_index(beta, geo), geo) == beta


@pytest.mark.parametrize("key", [SpectrumKey(4, 0, 0, 0), SpectrumKey(0, -1, 0, 0),
                                 SpectrumKey(0, 0, 3, 0), SpectrumKey(0, 0, 0, 2)])
def test_inv_index_out_of_range(key):
    with pytest.raises(KeyOutOfRange):
        inv_index(key, GEO)


def test_generate_is_deterministic():
    a, b = generate_synthetic(GEO, 1), generate_synthetic(GEO, 1)
    assert a.content_digest == b.content_digest
    assert np.array_equal(a.rows, b.rows)
    digests = {generate_synthetic(GEO, s).content_digest for s in range(20)}
    assert len(digests) == 20


def test_full_scale_size():
    geo = DbGeometry.build(100, 100, 10, 10, 560)
    assert geo.record_count == 10**6
    assert geo.total_bytes == 560 * 10**6


def test_digest_sensitive_to_every_byte():
    db = generate_synthetic(DbGeometry.build(2, 2, 2, 2, 4), 3)
    base = db.content_digest
    rows = db.rows.copy()
    for j in range(rows.shape[0]):
        for q in range(rows.shape[1]):
            rows[j, q] ^= 0x80
            assert content_digest(rows) != base
            rows[j, q] ^= 0x80


def test_row_access(small_db):
    assert len(small_db.row(5)) == small_db.b
    assert small_db.lookup(key_for_index(5, small_db.geometry)) == small_db.row(5)
    with pytest.raises(KeyOutOfRange):
        small_db.row(small_db.r)
    assert not small_db.rows.flags.writeable


def test_save_load_roundtrip(tmp_path):
    db = generate_synthetic(GEO, 9)
    path = tmp_path / "db.spdb"
    save_db(db, path)
    back = load_db(path)
    assert back.geometry == db.geometry
    assert back.content_digest == db.content_digest
    assert np.array_equal(back.rows, db.rows)
    assert back.seed == 9


def test_truncated_file(tmp_path):
    path = tmp_path / "db.spdb"
    save_db(generate_synthetic(GEO, 9), path)
    data = path.read_bytes()
    path.write_bytes(data[:-1])
    with pytest.raises(CorruptDatabase):
        load_db(path)
    path.write_bytes(data[:40])
    with pytest.raises(CorruptDatabase):
        load_db(path)


def test_digest_mismatch(tmp_path):
    path = tmp_path / "db.spdb"
    save_db(generate_synthetic(GEO, 9), path)
    data = bytearray(path.read_bytes())
    data[100] ^= 1
    path.write_bytes(bytes(data))
    with pytest.raises(CorruptDatabase, match="digest"):
        load_db(path)


def test_golden_header(tmp_path):
    # header written field by field, independent of the module's struct layout
    import hashlib

    rows = bytes(range(24))  # r = 6 rows of b = 4 bytes
    digest = hashlib.blake2b(rows, digest_size=16).digest()
    header = (
        b"SPDB"
        + (1).to_bytes(2, "little") + bytes(2)
        + (6).to_bytes(8, "little")
        + (4).to_bytes(4, "little")
        + (3).to_bytes(4, "little") + (1).to_bytes(4, "little")
        + (2).to_bytes(4, "little") + (1).to_bytes(4, "little")
        + (77).to_bytes(8, "little")
        + digest + bytes(4)
    )
    assert len(header) == 64
    path = tmp_path / "golden.spdb"
    path.write_bytes(header + rows)
    db = load_db(path)
    assert db.geometry == DbGeometry(6, 4, 3, 1, 2, 1)
    assert db.seed == 77
    assert db.row(5) == bytes([20, 21, 22, 23])
    # and the writer reproduces the same bytes
    out = tmp_path / "again.spdb"
    save_db(db, out)
    assert out.read_bytes() == header + rows


def test_bad_magic(tmp_path):
    path = tmp_path / "db.spdb"
    save_db(generate_synthetic(GEO, 1), path)
    data = bytearray(path.read_bytes())
    data[0:4] = b"XXXX"
    path.write_bytes(bytes(data))
    with pytest.raises(CorruptDatabase, match="magic"):
        load_db(path)
