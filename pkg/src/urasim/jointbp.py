"""Joint decoding of all detected users' LDPC parts from the last l_c rows.

The factor graph couples three node types: observation nodes (received
samples, one per antenna and channel use), variable nodes (each user's
code bits), and the users' LDPC check nodes.  Observation-side messages
treat the other users' soft symbols as Gaussian interference; Tanner-side
messages follow the exact sum-product rule.  Each user's Tanner graph
lives in de-interleaved (code-domain) positions, so observation-side
messages are permuted per user on the way in and out.

Users whose hard decisions satisfy all parity checks are frozen: their
symbol probabilities are pinned to near-certain values for the remaining
iterations, which cancels them from the interference model.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .amp import CsEstimate
from .channel import Interleaver, make_interleaver
from .config import SimConfig, derive_energy
from .ldpc import LdpcCode

LLR_CLAMP = 40.0
PROB_FLOOR = 1e-12
_TANH_LIMIT = 1.0 - 1e-15


class JointBpError(ValueError):
    pass


@dataclass(frozen=True)
class TannerGraph:
    """Edge-indexed view of a parity-check matrix, padded per node."""

    n_vars: int
    n_checks: int
    edge_var: np.ndarray      # (E,) variable index of each edge
    edge_check: np.ndarray    # (E,) check index of each edge
    by_var: np.ndarray        # (n_vars, dv_max) edge ids, -1 padded
    by_var_mask: np.ndarray
    by_check: np.ndarray      # (n_checks, dc_max) edge ids, -1 padded
    by_check_mask: np.ndarray
    check_orientation: np.ndarray  # (n_checks,) +1 even degree, -1 odd

    @property
    def n_edges(self) -> int:
        return int(self.edge_var.size)


def build_tanner_graph(h: np.ndarray) -> TannerGraph:
    h = np.asarray(h, dtype=np.uint8)
    n_checks, n_vars = h.shape
    checks, vars_ = np.nonzero(h)  # row-major: grouped by check
    n_edges = checks.size
    edge_ids = np.arange(n_edges)

    dc = h.sum(axis=1).astype(np.int64)
    dv = h.sum(axis=0).astype(np.int64)
    by_check = np.full((n_checks, int(dc.max())), -1, dtype=np.int64)
    pos_in_check = edge_ids - np.repeat(np.concatenate([[0], np.cumsum(dc)[:-1]]), dc)
    by_check[checks, pos_in_check] = edge_ids

    by_var = np.full((n_vars, int(dv.max())), -1, dtype=np.int64)
    fill = np.zeros(n_vars, dtype=np.int64)
    for e in range(n_edges):
        v = vars_[e]
        by_var[v, fill[v]] = e
        fill[v] += 1

    return TannerGraph(
        n_vars=n_vars, n_checks=n_checks,
        edge_var=vars_.astype(np.int64), edge_check=checks.astype(np.int64),
        by_var=by_var, by_var_mask=by_var >= 0,
        by_check=by_check, by_check_mask=by_check >= 0,
        check_orientation=np.where(dc % 2 == 0, 1.0, -1.0),
    )


@dataclass
class BpWorkspace:
    """All message arrays after one full iteration (code-domain positions)."""

    lambda_msgs: np.ndarray  # (K, M, Lc) observation-to-variable LLRs
    p_msgs: np.ndarray       # (K, M, Lc) variable-to-observation probabilities
    q_msgs: np.ndarray       # (K, E) variable-to-check LLRs
    r_msgs: np.ndarray       # (K, E) check-to-variable LLRs
    total_llr: np.ndarray    # (K, Lc)
    bits: np.ndarray         # (K, Lc) hard decisions


@dataclass(frozen=True)
class JbpOutcome:
    """Decoded codewords and the split into decoded / undecoded users."""

    decoded_users: list[int]      # positions into the detected-user list
    codewords: np.ndarray         # (len(decoded_users), Lc) uint8
    undecoded_users: list[int]
    iterations_used: int
    final_llr: np.ndarray         # (K, Lc) posterior LLRs at decision time


def obs_to_var(yc: np.ndarray, h_hat: np.ndarray, p_msgs: np.ndarray,
               noise_var: float) -> np.ndarray:
    """Observation-to-variable LLRs with interference treated as Gaussian.

    All arrays are in channel-domain symbol order.  h_hat is the (K, M)
    effective channel (transmit scaling included); p_msgs holds the
    probability of symbol +1 per (user, antenna, symbol).
    """
    g = np.asarray(h_hat, dtype=np.complex128)
    p = np.asarray(p_msgs, dtype=np.float64)
    y = np.asarray(yc, dtype=np.complex128).T  # (M, Lc)
    if not (np.isfinite(p).all() and np.isfinite(g).all() and np.isfinite(y).all()):
        raise JointBpError("non-finite input to obs_to_var")
    soft = 2.0 * p - 1.0                                   # (K, M, Lc)
    mean_all = np.einsum("km,kml->ml", g, soft)
    mu = mean_all[None] - g[:, :, None] * soft             # leave-one-out mean
    spread = (np.abs(g) ** 2)[:, :, None] * 4.0 * p * (1.0 - p)
    sigma = spread.sum(axis=0)[None] - spread + noise_var  # leave-one-out variance
    return (2.0 / sigma) * (g.conj()[:, :, None] * (y[None] - mu)).real


def _antenna_sum(lambda_msgs: np.ndarray) -> np.ndarray:
    return lambda_msgs.sum(axis=1)


def _check_sum(r_msgs: np.ndarray, graph: TannerGraph) -> np.ndarray:
    gathered = r_msgs[:, graph.by_var]            # (K, Lc, dv_max)
    return (gathered * graph.by_var_mask).sum(axis=-1)


def var_to_obs(lambda_msgs: np.ndarray, r_msgs: np.ndarray,
               graph: TannerGraph) -> np.ndarray:
    """Probability of symbol +1 toward each observation node (code domain)."""
    asum = _antenna_sum(lambda_msgs)
    rsum = _check_sum(r_msgs, graph)
    arg = asum[:, None, :] - lambda_msgs + rsum[:, None, :]
    np.clip(arg, -LLR_CLAMP, LLR_CLAMP, out=arg)
    p = 1.0 / (1.0 + np.exp(-arg))
    return np.clip(p, PROB_FLOOR, 1.0 - PROB_FLOOR)


def var_to_check(lambda_msgs: np.ndarray, r_msgs: np.ndarray,
                 graph: TannerGraph) -> np.ndarray:
    """Variable-to-check LLRs: all antennas plus all other checks.

    The leave-one-out sum accumulates the kept terms in adjacency order
    rather than subtracting from the total, so each message reproduces
    the direct formula evaluation bit-for-bit.
    """
    k = lambda_msgs.shape[0]
    asum = _antenna_sum(lambda_msgs)
    r_by_var = np.where(graph.by_var_mask[None], r_msgs[:, graph.by_var], 0.0)
    dv_max = r_by_var.shape[-1]
    q_by_var = np.empty_like(r_by_var)
    for j in range(dv_max):
        acc = asum.copy()
        for i in range(dv_max):
            if i != j:
                acc += r_by_var[..., i]
        q_by_var[..., j] = acc
    q_msgs = np.empty((k, graph.n_edges), dtype=np.float64)
    mask = graph.by_var_mask
    q_msgs[:, graph.by_var[mask]] = q_by_var[:, mask]
    return np.clip(q_msgs, -LLR_CLAMP, LLR_CLAMP)


def check_to_var(q_msgs: np.ndarray, graph: TannerGraph) -> np.ndarray:
    """Sum-product check update via leave-one-out tanh products.

    Messages carry the LLR orientation log P(bit=1)/P(bit=0) with BPSK
    bit 1 -> +1.  In that orientation the exact parity message satisfies
    tanh(R/2) = (-1)^deg * prod tanh(Q/2): the textbook product rule holds
    for even-degree checks and flips sign for odd degrees (for bit 0 -> +1
    mapping the factor disappears, which is where the usual form comes
    from).

    Products accumulate in adjacency order (not prefix/suffix), keeping
    arctanh inputs bit-identical to a direct evaluation: near saturation
    arctanh amplifies even last-ulp ordering differences.
    """
    k = q_msgs.shape[0]
    t = np.tanh(q_msgs[:, graph.by_check] / 2.0)     # (K, N, dc_max)
    t = np.where(graph.by_check_mask[None], t, 1.0)
    dc_max = t.shape[-1]
    loo = np.empty_like(t)
    for j in range(dc_max):
        acc = np.ones(t.shape[:-1])
        for i in range(dc_max):
            if i != j:
                acc = acc * t[..., i]
        loo[..., j] = acc
    loo = np.clip(loo * graph.check_orientation[None, :, None],
                  -_TANH_LIMIT, _TANH_LIMIT)
    r_grouped = np.clip(2.0 * np.arctanh(loo), -LLR_CLAMP, LLR_CLAMP)
    r_msgs = np.empty((k, graph.n_edges), dtype=np.float64)
    mask = graph.by_check_mask
    r_msgs[:, graph.by_check[mask]] = r_grouped[:, mask]
    return r_msgs


def total_llr_and_decide(lambda_msgs: np.ndarray, r_msgs: np.ndarray,
                         graph: TannerGraph) -> tuple[np.ndarray, np.ndarray]:
    """Posterior LLR per bit and the hard decision (ties decide 0)."""
    total = _antenna_sum(lambda_msgs) + _check_sum(r_msgs, graph)
    return total, (total > 0).astype(np.uint8)


def bp_iteration(yc: np.ndarray, g: np.ndarray, perms: list[Interleaver],
                 graph: TannerGraph, p_msgs: np.ndarray, r_msgs: np.ndarray,
                 noise_var: float) -> BpWorkspace:
    """One full flooding iteration; pure function of its inputs.

    p_msgs and the returned workspace are in code-domain order; the
    per-user interleavers are applied only around the observation side.
    """
    k = p_msgs.shape[0]
    p_chan = np.empty_like(p_msgs)
    for j in range(k):
        p_chan[j] = perms[j].interleave(p_msgs[j])
    lam_chan = obs_to_var(yc, g, p_chan, noise_var)
    lam_code = np.empty_like(lam_chan)
    for j in range(k):
        lam_code[j] = perms[j].deinterleave(lam_chan[j])

    q = var_to_check(lam_code, r_msgs, graph)
    r_new = check_to_var(q, graph)
    total, bits = total_llr_and_decide(lam_code, r_new, graph)
    p_new = var_to_obs(lam_code, r_new, graph)
    return BpWorkspace(lambda_msgs=lam_code, p_msgs=p_new, q_msgs=q,
                       r_msgs=r_new, total_llr=total, bits=bits)


def _pin_probabilities(p_msgs: np.ndarray, users: np.ndarray,
                       bits: np.ndarray) -> None:
    hard = np.where(bits[users] == 1, 1.0 - PROB_FLOOR, PROB_FLOOR)
    p_msgs[users] = hard[:, None, :]


def jbp_decode(yc: np.ndarray, cs_est: CsEstimate, code: LdpcCode,
               cfg: SimConfig, trace: list | None = None) -> JbpOutcome:
    """Decode every detected user's codeword from the LDPC-part signal.

    Iterates until all users pass their parity checks or cfg.bp_max_iter
    is reached; an all-fail outcome is legal.  Channel estimates from the
    sparse-recovery stage are used as-is, scaled by sqrt(Es).
    """
    k = cs_est.k_detected
    if k == 0:
        return JbpOutcome(decoded_users=[], codewords=np.zeros((0, code.n), np.uint8),
                          undecoded_users=[], iterations_used=0,
                          final_llr=np.zeros((0, code.n)))
    es = derive_energy(cfg).symbol_energy
    g = np.sqrt(es) * np.asarray(cs_est.h_hat, dtype=np.complex128)
    graph = build_tanner_graph(code.parity_check_matrix)
    perms = [make_interleaver(int(idx), code.n, cfg.master_seed)
             for idx in cs_est.detected]

    p_msgs = np.full((k, g.shape[1], code.n), 0.5)
    r_msgs = np.zeros((k, graph.n_edges))
    frozen = np.zeros(k, dtype=bool)
    decided = np.zeros((k, code.n), dtype=np.uint8)
    final_llr = np.zeros((k, code.n))
    h64 = code.parity_check_matrix.astype(np.int64)
    iterations = 0

    for iterations in range(1, cfg.bp_max_iter + 1):
        ws = bp_iteration(yc, g, perms, graph, p_msgs, r_msgs, cfg.noise_var)
        r_msgs = ws.r_msgs
        p_msgs = ws.p_msgs

        active = np.flatnonzero(~frozen)
        if active.size:
            final_llr[active] = ws.total_llr[active]
            syndromes = (h64 @ ws.bits[active].T) % 2
            passed = active[(syndromes == 0).all(axis=0)]
            if passed.size:
                frozen[passed] = True
                decided[passed] = ws.bits[passed]
        pinned = np.flatnonzero(frozen)
        if pinned.size:
            _pin_probabilities(p_msgs, pinned, decided)
        if trace is not None:
            trace.append({
                "iteration": iterations,
                "users_passing_parity": int(frozen.sum()),
                "mean_abs_llr": float(np.abs(ws.total_llr).mean()),
            })
        if frozen.all():
            break

    decoded = np.flatnonzero(frozen)
    return JbpOutcome(
        decoded_users=decoded.tolist(),
        codewords=decided[decoded].copy(),
        undecoded_users=np.flatnonzero(~frozen).tolist(),
        iterations_used=iterations,
        final_llr=final_llr,
    )
