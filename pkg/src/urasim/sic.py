"""Outer interference-cancellation loop, message stitching, and error metrics.

Each round decodes the remaining users jointly, then rebuilds every
successfully decoded user's contribution (BPSK re-modulation, re-applied
interleaver, transmit scaling, estimated channel row) and subtracts the
accumulated sum from the original LDPC-part signal.  The loop stops when
a round decodes nobody new, when nobody is left, or at the round cap.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .amp import CsEstimate
from .channel import Interleaver, bpsk_modulate, make_interleaver
from .config import SimConfig, derive_energy
from .jointbp import jbp_decode
from .ldpc import LdpcCode, extract_message
from .codebook import decode_cs


class SicError(ValueError):
    pass


@dataclass
class SicState:
    """Progress of the cancellation loop over one trial."""

    residual_y: np.ndarray               # (l_c, m) complex
    remaining_users: list[int]           # positions into the detected list
    decoded_users: list[int] = field(default_factory=list)
    codewords: dict[int, np.ndarray] = field(default_factory=dict)
    round: int = 0
    bp_iterations: int = 0               # summed over rounds


@dataclass(frozen=True)
class RecoveredMessage:
    """A stitched b_total-bit message from one decoded user."""

    bits: np.ndarray  # (b_total,) uint8

    def as_string(self) -> str:
        return "".join(str(int(b)) for b in self.bits)


def subtract_decoded(yc: np.ndarray,
                     decoded: list[tuple[np.ndarray, np.ndarray, Interleaver]],
                     es: float) -> np.ndarray:
    """Remove decoded users' reconstructed signals from the LDPC-part rows.

    Each entry of ``decoded`` is (codeword bits, estimated channel row,
    interleaver).  Reconstruction re-applies BPSK, the user's interleaver,
    and the sqrt(Es) transmit scaling omitted from the stored codeword.
    """
    y = np.asarray(yc, dtype=np.complex128)
    residual = y.copy()
    scale = np.sqrt(es)
    for bits, h_row, interleaver in decoded:
        h_row = np.asarray(h_row, dtype=np.complex128)
        if h_row.shape != (y.shape[1],):
            raise SicError(
                f"channel row shape {h_row.shape} does not match {y.shape[1]} antennas"
            )
        symbols = scale * interleaver.interleave(bpsk_modulate(bits))
        if symbols.size != y.shape[0]:
            raise SicError(
                f"codeword length {symbols.size} does not match {y.shape[0]} rows"
            )
        residual -= np.outer(symbols, h_row)
    return residual


def run_sic(yc: np.ndarray, cs_est: CsEstimate, code: LdpcCode, cfg: SimConfig,
            max_rounds: int | None = None, trace: list | None = None) -> SicState:
    """Repeated joint decoding with residual subtraction between rounds."""
    if max_rounds is None:
        max_rounds = cfg.sic_max_rounds
    state = SicState(
        residual_y=np.asarray(yc, dtype=np.complex128).copy(),
        remaining_users=list(range(cs_est.k_detected)),
    )
    if cs_est.k_detected == 0:
        return state
    es = derive_energy(cfg).symbol_energy
    perms = [make_interleaver(int(idx), code.n, cfg.master_seed)
             for idx in cs_est.detected]

    while state.round < max_rounds and state.remaining_users:
        state.round += 1
        remaining = np.asarray(state.remaining_users, dtype=np.int64)
        sub_est = CsEstimate(
            detected=cs_est.detected[remaining],
            h_hat=cs_est.h_hat[remaining],
            posteriors=cs_est.posteriors[remaining],
        )
        outcome = jbp_decode(state.residual_y, sub_est, code, cfg, trace=trace)
        state.bp_iterations += outcome.iterations_used
        if not outcome.decoded_users:
            break
        for local, word in zip(outcome.decoded_users, outcome.codewords):
            user = int(remaining[local])
            state.decoded_users.append(user)
            state.codewords[user] = word.copy()
        state.remaining_users = [u for u in state.remaining_users
                                 if u not in state.codewords]
        contributions = [
            (state.codewords[u], cs_est.h_hat[u], perms[u])
            for u in sorted(state.codewords)
        ]
        state.residual_y = subtract_decoded(yc, contributions, es)
    return state


def stitch(cs_est: CsEstimate, sic_state: SicState, code: LdpcCode,
           bp: int) -> list[RecoveredMessage]:
    """Rebuild full messages: index bits prefix + systematic codeword bits."""
    messages = []
    for user in sorted(sic_state.decoded_users):
        index = int(cs_est.detected[user])
        prefix = decode_cs(index, bp)
        suffix = extract_message(sic_state.codewords[user], code)
        messages.append(RecoveredMessage(bits=np.concatenate([prefix, suffix])))
    return messages


def compute_metrics(truth: list[np.ndarray],
                    recovered: list[RecoveredMessage]) -> tuple[float, float]:
    """Per-user misdetection rate and recovered-list false-alarm rate.

    A truth message is detected if its exact bit string appears in the
    recovered list; duplicate truth messages (full-message collisions) are
    all satisfied by a single matching entry.  The false-alarm rate of an
    empty recovered list is 0 by convention.
    """
    if not truth:
        raise SicError("truth list must be nonempty")
    truth_keys = [m.tobytes() for m in (np.asarray(t, dtype=np.uint8) for t in truth)]
    truth_set = set(truth_keys)
    rec_keys = [r.bits.astype(np.uint8).tobytes() for r in recovered]
    rec_set = set(rec_keys)

    missed = sum(1 for key in truth_keys if key not in rec_set)
    p_md = missed / len(truth_keys)
    if not rec_keys:
        return p_md, 0.0
    false_hits = sum(1 for key in rec_keys if key not in truth_set)
    return p_md, false_hits / len(rec_keys)
