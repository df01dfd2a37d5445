"""Dictionary generation, index mapping, collisions, binary round-trip."""

import numpy as np
import pytest

from urasim.codebook import (
    CodebookError,
    decode_cs,
    detect_collisions,
    encode_cs,
    export_codebook,
    generate_codebook,
    import_codebook,
)


def test_column_power_constraint():
    book = generate_codebook(seed=7, lp=300, bp=8)
    norms_sq = np.linalg.norm(book.columns, axis=0) ** 2
    assert book.columns.shape == (300, 256)
    assert np.abs(norms_sq - 300).max() < 300 * 1e-9


def test_tiny_codebook():
    book = generate_codebook(seed=7, lp=4, bp=1)
    assert book.columns.shape == (4, 2)
    assert np.allclose(np.linalg.norm(book.columns, axis=0) ** 2, 4.0)


def test_generation_deterministic():
    a = generate_codebook(seed=11, lp=32, bp=6)
    b = generate_codebook(seed=11, lp=32, bp=6)
    assert np.array_equal(a.columns, b.columns)
    c = generate_codebook(seed=12, lp=32, bp=6)
    assert not np.array_equal(a.columns, c.columns)


def test_entries_look_unit_variance():
    book = generate_codebook(seed=3, lp=500, bp=9)
    var = np.mean(np.abs(book.columns) ** 2)
    assert abs(var - 1.0) < 0.02


def test_bp_cap_rejected():
    with pytest.raises(CodebookError):
        generate_codebook(seed=1, lp=8, bp=25)
    with pytest.raises(CodebookError):
        generate_codebook(seed=1, lp=0, bp=4)


def test_encode_cs_endpoints():
    assert encode_cs(np.zeros(16, dtype=np.uint8)) == 1
    assert encode_cs(np.ones(16, dtype=np.uint8)) == 65536
    assert encode_cs(np.array([1, 0, 1])) == 6


def test_encode_decode_bijection():
    rng = np.random.default_rng(5)
    for _ in range(1000):
        bits = rng.integers(0, 2, 12, dtype=np.uint8)
        assert np.array_equal(decode_cs(encode_cs(bits), 12), bits)
    for idx in (1, 17, 4096):
        assert encode_cs(decode_cs(idx, 12)) == idx


def test_encode_decode_rejects_bad_input():
    with pytest.raises(CodebookError):
        encode_cs(np.array([0, 2, 1]))
    with pytest.raises(CodebookError):
        decode_cs(0, 8)
    with pytest.raises(CodebookError):
        decode_cs(257, 8)


def test_detect_collisions_groups():
    assert detect_collisions([5, 9, 5]) == [[0, 2]]
    assert detect_collisions([1, 2, 3]) == []
    assert detect_collisions([4, 4, 4, 2, 2]) == [[3, 4], [0, 1, 2]]


def test_collision_rate_matches_birthday_bound():
    # per-user collision probability for Ka users on 2^bp indices
    ka, bp, draws = 100, 16, 120_000
    rng = np.random.default_rng(99)
    picks = rng.integers(1, 2 ** bp + 1, size=(draws // ka, ka))
    collided = 0
    for row in picks:
        groups = detect_collisions(row.tolist())
        collided += sum(len(g) for g in groups)
    observed = collided / picks.size
    expected = 1 - (1 - 2.0 ** -bp) ** (ka - 1)
    assert observed == pytest.approx(expected, rel=0.35)


def test_binary_export_import_roundtrip(tmp_path):
    book = generate_codebook(seed=21, lp=24, bp=5)
    path = tmp_path / "book.bin"
    export_codebook(book, str(path))
    loaded = import_codebook(str(path))
    assert loaded.lp == 24 and loaded.bp == 5 and loaded.seed == 21
    assert np.array_equal(loaded.columns, book.columns)


def test_import_rejects_corrupt_files(tmp_path):
    path = tmp_path / "bad.bin"
    path.write_bytes(b"NOTMAGIC" + b"\x00" * 64)
    with pytest.raises(CodebookError, match="magic"):
        import_codebook(str(path))
    book = generate_codebook(seed=2, lp=4, bp=2)
    good = tmp_path / "good.bin"
    export_codebook(book, str(good))
    good.write_bytes(good.read_bytes()[:-8])
    with pytest.raises(CodebookError, match="truncated"):
        import_codebook(str(good))
