"""(l_c, b_c) LDPC code: construction, systematic encoding, parity checking.

The parity-check matrix is built by progressive edge growth with column
degree 3 and check degrees kept as uniform as possible.  A construction
attempt is accepted only if the graph is 4-cycle free (girth >= 6), the
matrix has full row rank over GF(2), and check degrees differ by at most
one; otherwise the builder retries with a derived seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import mix_seed

VAR_DEGREE = 3
DEFAULT_RETRY_BUDGET = 64


class LdpcError(ValueError):
    pass


class LdpcConstructionError(LdpcError):
    """Raised when no acceptable graph is found within the retry budget."""


@dataclass(frozen=True)
class LdpcCode:
    """Immutable code: parity-check matrix plus derived encoder structure."""

    n: int                        # block length l_c
    k: int                        # message length b_c
    parity_check_matrix: np.ndarray  # (n - k, n) uint8
    generator: np.ndarray            # (k, n) uint8, systematic
    message_cols: np.ndarray         # (k,) positions of message bits in a codeword
    pivot_cols: np.ndarray           # (n - k,) positions of parity bits
    var_adjacency: tuple             # per-variable tuple of check indices
    check_adjacency: tuple           # per-check tuple of variable indices
    seed: int = field(default=0)

    @property
    def num_checks(self) -> int:
        return self.n - self.k


def gf2_row_reduce(mat: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form over GF(2); returns (rref, pivot columns)."""
    a = mat.astype(np.uint8) % 2
    rows, cols = a.shape
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        hits = np.flatnonzero(a[r:, c]) + r
        if hits.size == 0:
            continue
        if hits[0] != r:
            a[[r, hits[0]]] = a[[hits[0], r]]
        other = np.flatnonzero(a[:, c])
        other = other[other != r]
        a[other] ^= a[r]
        pivots.append(c)
        r += 1
    return a, pivots


def gf2_rank(mat: np.ndarray) -> int:
    return len(gf2_row_reduce(mat)[1])


def _check_distances(var: int, var_checks: list[list[int]],
                     check_vars: list[list[int]], n_checks: int) -> np.ndarray:
    """BFS depths from a variable node to every check node (-1 = unreachable)."""
    dist = np.full(n_checks, -1, dtype=np.int64)
    seen_var = {var}
    frontier = list(var_checks[var])
    depth = 1
    for c in frontier:
        dist[c] = depth
    while frontier:
        next_vars = []
        for c in frontier:
            for v in check_vars[c]:
                if v not in seen_var:
                    seen_var.add(v)
                    next_vars.append(v)
        depth += 2
        frontier = []
        for v in next_vars:
            for c in var_checks[v]:
                if dist[c] < 0:
                    dist[c] = depth
                    frontier.append(c)
    return dist


def _peg_attempt(lc: int, n_checks: int, dv: int, dc_cap: int,
                 rng: np.random.Generator) -> np.ndarray | None:
    """One progressive-edge-growth pass; returns H or None on a dead end."""
    var_checks: list[list[int]] = [[] for _ in range(lc)]
    check_vars: list[list[int]] = [[] for _ in range(n_checks)]
    check_deg = np.zeros(n_checks, dtype=np.int64)

    for v in range(lc):
        for edge in range(dv):
            if edge == 0:
                candidates = np.flatnonzero(check_deg < dc_cap)
            else:
                dist = _check_distances(v, var_checks, check_vars, n_checks)
                # connecting within distance 3 would close a 4-cycle
                ok = (dist < 0) | (dist >= 5)
                ok &= check_deg < dc_cap
                candidates = np.flatnonzero(ok)
                if candidates.size and (dist[candidates] < 0).any():
                    candidates = candidates[dist[candidates] < 0]
                elif candidates.size:
                    # keep only the farthest layer to maximise local girth
                    far = dist[candidates].max()
                    candidates = candidates[dist[candidates] == far]
            if candidates.size == 0:
                return None
            lowest = candidates[check_deg[candidates] == check_deg[candidates].min()]
            c = int(lowest[rng.integers(lowest.size)])
            var_checks[v].append(c)
            check_vars[c].append(v)
            check_deg[c] += 1

    h = np.zeros((n_checks, lc), dtype=np.uint8)
    for v, checks in enumerate(var_checks):
        h[checks, v] = 1
    return h


def _has_four_cycle(h: np.ndarray) -> bool:
    overlap = (h.astype(np.int64) @ h.T.astype(np.int64))
    np.fill_diagonal(overlap, 0)
    return bool((overlap >= 2).any())


def build_ldpc(lc: int, bc: int, seed: int,
               retry_budget: int = DEFAULT_RETRY_BUDGET) -> LdpcCode:
    """Construct the (lc, bc) code deterministically from the seed."""
    if not 0 < bc < lc:
        raise LdpcError(f"need 0 < bc < lc, got (lc={lc}, bc={bc})")
    n_checks = lc - bc
    if n_checks < 2:
        raise LdpcError("need at least 2 check rows for column weight >= 2")
    dv = min(VAR_DEGREE, n_checks)
    dc_cap = int(np.ceil(dv * lc / n_checks))

    for attempt in range(retry_budget):
        rng = np.random.default_rng(mix_seed(seed, "ldpc-peg", attempt))
        h = _peg_attempt(lc, n_checks, dv, dc_cap, rng)
        if h is None:
            continue
        deg = h.sum(axis=1)
        if deg.max() - deg.min() > 1:
            continue
        if _has_four_cycle(h):
            continue
        if gf2_rank(h) != n_checks:
            continue
        return _finalize(h, lc, bc, seed)

    raise LdpcConstructionError(
        f"no girth-6 full-rank ({lc}, {bc}) graph found with seed {seed} "
        f"after {retry_budget} attempts"
    )


def _finalize(h: np.ndarray, lc: int, bc: int, seed: int) -> LdpcCode:
    rref, pivots = gf2_row_reduce(h)
    if len(pivots) != lc - bc:
        raise LdpcConstructionError("rank lost during reduction")
    pivot_cols = np.asarray(pivots, dtype=np.int64)
    message_cols = np.setdiff1d(np.arange(lc, dtype=np.int64), pivot_cols)

    # systematic generator: unit message bit -> parity bits via the RREF
    gen = np.zeros((bc, lc), dtype=np.uint8)
    gen[np.arange(bc), message_cols] = 1
    gen[:, pivot_cols] = rref[:, message_cols].T

    if ((gen.astype(np.int64) @ h.T.astype(np.int64)) % 2).any():
        raise LdpcConstructionError("generator does not satisfy the parity checks")

    var_adj = tuple(tuple(np.flatnonzero(h[:, v]).tolist()) for v in range(lc))
    check_adj = tuple(tuple(np.flatnonzero(h[r]).tolist()) for r in range(lc - bc))
    return LdpcCode(
        n=lc, k=bc, parity_check_matrix=h, generator=gen,
        message_cols=message_cols, pivot_cols=pivot_cols,
        var_adjacency=var_adj, check_adjacency=check_adj, seed=seed,
    )


def ldpc_encode(bits_c: np.ndarray, code: LdpcCode) -> np.ndarray:
    """Systematic encode: message bits land on code.message_cols."""
    bits = np.asarray(bits_c, dtype=np.uint8)
    if bits.shape != (code.k,):
        raise LdpcError(f"message must have length {code.k}, got {bits.shape}")
    return (bits.astype(np.int64) @ code.generator.astype(np.int64) % 2).astype(np.uint8)


def extract_message(codeword: np.ndarray, code: LdpcCode) -> np.ndarray:
    """Recover the message bits from a systematic codeword."""
    word = np.asarray(codeword, dtype=np.uint8)
    if word.shape != (code.n,):
        raise LdpcError(f"codeword must have length {code.n}, got {word.shape}")
    return word[code.message_cols]


def parity_check(word: np.ndarray, code: LdpcCode) -> bool:
    """True iff all parity equations are satisfied."""
    w = np.asarray(word, dtype=np.uint8)
    if w.shape != (code.n,):
        raise LdpcError(f"word must have length {code.n}, got {w.shape}")
    return not ((code.parity_check_matrix.astype(np.int64) @ w.astype(np.int64)) % 2).any()


def export_alist(code: LdpcCode, path: str) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(alist_text(code))


def alist_text(code: LdpcCode) -> str:
    """Standard alist rendering of the parity-check matrix (1-based, 0-padded)."""
    h = code.parity_check_matrix
    n_checks, n_vars = h.shape
    col_w = h.sum(axis=0)
    row_w = h.sum(axis=1)
    max_col, max_row = int(col_w.max()), int(row_w.max())
    lines = [
        f"{n_vars} {n_checks}",
        f"{max_col} {max_row}",
        " ".join(str(int(w)) for w in col_w),
        " ".join(str(int(w)) for w in row_w),
    ]
    for v in range(n_vars):
        entries = [str(c + 1) for c in np.flatnonzero(h[:, v])]
        entries += ["0"] * (max_col - len(entries))
        lines.append(" ".join(entries))
    for r in range(n_checks):
        entries = [str(v + 1) for v in np.flatnonzero(h[r])]
        entries += ["0"] * (max_row - len(entries))
        lines.append(" ".join(entries))
    return "\n".join(lines) + "\n"


def import_alist(path: str) -> LdpcCode:
    """Load a parity-check matrix in alist format and rebuild the encoder.

    Both padded (zero-filled) and reduced alist variants are accepted.
    The imported code keeps seed 0; it is validated for rank but not for
    girth (foreign matrices may contain 4-cycles).
    """
    with open(path, encoding="ascii") as fh:
        rows = [line.split() for line in fh if line.strip()]
    if len(rows) < 4:
        raise LdpcError(f"{path}: truncated alist file")
    try:
        n_vars, n_checks = int(rows[0][0]), int(rows[0][1])
        if len(rows) < 4 + n_vars:
            raise LdpcError(f"{path}: truncated alist file")
        col_w = [int(t) for t in rows[2]]
        if len(col_w) != n_vars:
            raise LdpcError(f"{path}: column-weight list has wrong length")
        h = np.zeros((n_checks, n_vars), dtype=np.uint8)
        for v in range(n_vars):
            entries = [int(t) for t in rows[4 + v] if int(t) != 0]
            if len(entries) != col_w[v]:
                raise LdpcError(f"{path}: column {v + 1} weight mismatch")
            for c in entries:
                if not 1 <= c <= n_checks:
                    raise LdpcError(f"{path}: check index {c} out of range")
                h[c - 1, v] = 1
    except (ValueError, IndexError) as exc:
        raise LdpcError(f"{path}: malformed alist file: {exc}") from exc

    rank = gf2_rank(h)
    if rank != n_checks:
        raise LdpcError(f"{path}: parity-check matrix is rank deficient ({rank}/{n_checks})")
    return _finalize(h, n_vars, n_vars - n_checks, seed=0)
