"""LDPC construction invariants, encoding, parity, alist round-trip."""

import itertools

import numpy as np
import pytest

from urasim.ldpc import (
    LdpcConstructionError,
    LdpcError,
    build_ldpc,
    export_alist,
    extract_message,
    gf2_rank,
    import_alist,
    ldpc_encode,
    parity_check,
)


@pytest.fixture(scope="module")
def table_code():
    return build_ldpc(200, 80, seed=5)


def _four_cycle_free(h):
    overlap = h.astype(int) @ h.T.astype(int)
    np.fill_diagonal(overlap, 0)
    return not (overlap >= 2).any()


def test_table_code_degrees(table_code):
    h = table_code.parity_check_matrix
    assert h.shape == (120, 200)
    assert (h.sum(axis=0) == 3).all()          # column-regular dv = 3
    row_w = h.sum(axis=1)
    assert row_w.min() >= 2
    assert row_w.max() - row_w.min() <= 1      # near-regular checks
    assert row_w.max() == 5                     # 3 * 200 / 120


def test_rate_half_code_is_3_6_regular():
    code = build_ldpc(200, 100, seed=5)
    h = code.parity_check_matrix
    assert (h.sum(axis=0) == 3).all()
    assert (h.sum(axis=1) == 6).all()


def test_full_rank_and_girth(table_code):
    h = table_code.parity_check_matrix
    assert gf2_rank(h) == 120
    assert _four_cycle_free(h)


def test_generator_orthogonal_to_checks(table_code):
    g = table_code.generator
    h = table_code.parity_check_matrix
    assert not ((g.astype(int) @ h.T.astype(int)) % 2).any()


def test_construction_deterministic():
    a = build_ldpc(60, 24, seed=9)
    b = build_ldpc(60, 24, seed=9)
    assert np.array_equal(a.parity_check_matrix, b.parity_check_matrix)


def test_all_zero_message_encodes_to_zero(table_code):
    cw = ldpc_encode(np.zeros(80, dtype=np.uint8), table_code)
    assert not cw.any()
    assert parity_check(cw, table_code)


def test_random_codewords_satisfy_parity(table_code):
    rng = np.random.default_rng(1)
    for _ in range(1000):
        msg = rng.integers(0, 2, 80, dtype=np.uint8)
        cw = ldpc_encode(msg, table_code)
        assert parity_check(cw, table_code)


def test_systematic_extraction_roundtrip(table_code):
    rng = np.random.default_rng(2)
    for _ in range(50):
        msg = rng.integers(0, 2, 80, dtype=np.uint8)
        assert np.array_equal(extract_message(ldpc_encode(msg, table_code),
                                              table_code), msg)


def test_single_bit_flip_detected(table_code):
    rng = np.random.default_rng(3)
    cw = ldpc_encode(rng.integers(0, 2, 80, dtype=np.uint8), table_code)
    for pos in rng.choice(200, 20, replace=False):
        bad = cw.copy()
        bad[pos] ^= 1
        assert not parity_check(bad, table_code)


def test_tiny_code_girth_and_min_distance():
    # smallest column-weight-3 size where a 4-cycle-free graph exists
    code = build_ldpc(16, 4, seed=5)
    assert _four_cycle_free(code.parity_check_matrix)
    words = [ldpc_encode(np.array(bits, dtype=np.uint8), code)
             for bits in itertools.product((0, 1), repeat=4)]
    weights = [int(w.sum()) for w in words if w.any()]
    assert min(weights) >= 3


def test_infeasible_tiny_code_raises():
    # 6 columns of weight >= 2 over 3 rows cannot avoid 4-cycles
    with pytest.raises(LdpcConstructionError):
        build_ldpc(6, 3, seed=5, retry_budget=8)


def test_degenerate_shapes_rejected():
    with pytest.raises(LdpcError):
        build_ldpc(10, 10, seed=0)
    with pytest.raises(LdpcError):
        build_ldpc(10, 0, seed=0)
    with pytest.raises(LdpcError):
        build_ldpc(10, 9, seed=0)  # single check row


def test_encode_rejects_wrong_length(table_code):
    with pytest.raises(LdpcError):
        ldpc_encode(np.zeros(79, dtype=np.uint8), table_code)
    with pytest.raises(LdpcError):
        parity_check(np.zeros(199, dtype=np.uint8), table_code)


def test_alist_roundtrip(tmp_path, table_code):
    path = tmp_path / "code.alist"
    export_alist(table_code, str(path))
    loaded = import_alist(str(path))
    assert np.array_equal(loaded.parity_check_matrix,
                          table_code.parity_check_matrix)
    rng = np.random.default_rng(4)
    msg = rng.integers(0, 2, 80, dtype=np.uint8)
    assert parity_check(ldpc_encode(msg, loaded), table_code)


def test_alist_rejects_garbage(tmp_path):
    path = tmp_path / "bad.alist"
    path.write_text("3 2\n1 1\n1 1 1\n")
    with pytest.raises(LdpcError):
        import_alist(str(path))
