"""Interleaving, BPSK mapping, frame assembly, and the MIMO block-fading channel.

Each user's interleaver is keyed only by its codeword index and the master
seed, so the receiver regenerates it from the detected index alone; that
regeneration is the link between the dictionary part and the LDPC part.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import SimConfig, mix_seed


class PhyError(ValueError):
    pass


@dataclass(frozen=True)
class Interleaver:
    """Seeded permutation of the l_c LDPC symbols for one codeword index."""

    pattern_id: int          # the 1-based codeword index that keys the pattern
    permutation: np.ndarray  # interleaved[l] = original[permutation[l]]
    inverse: np.ndarray

    def interleave(self, x: np.ndarray) -> np.ndarray:
        return x[..., self.permutation]

    def deinterleave(self, x: np.ndarray) -> np.ndarray:
        return x[..., self.inverse]


def make_interleaver(index: int, lc: int, master_seed: int) -> Interleaver:
    """Uniform seeded permutation on lc positions, keyed by (index, master_seed)."""
    if lc < 1:
        raise PhyError(f"lc must be >= 1, got {lc}")
    rng = np.random.default_rng(mix_seed(master_seed, "interleaver", index))
    perm = rng.permutation(lc)
    inv = np.argsort(perm)
    return Interleaver(pattern_id=index, permutation=perm, inverse=inv)


def bpsk_modulate(bits: np.ndarray) -> np.ndarray:
    """Bit 1 -> +1, bit 0 -> -1."""
    b = np.asarray(bits)
    if not np.isin(b, (0, 1)).all():
        raise PhyError("bpsk_modulate expects binary input")
    return 2.0 * b.astype(np.float64) - 1.0


def bpsk_demodulate(symbols: np.ndarray) -> np.ndarray:
    """Sign decision back to bits; exact zero decides 0."""
    return (np.asarray(symbols) > 0).astype(np.uint8)


@dataclass(frozen=True)
class TxFrame:
    """One user's transmitted symbol vector, already scaled by sqrt(Es)."""

    user_id: int
    cs_index: int
    symbols: np.ndarray  # (l_p + l_c,) complex128


def assemble_frame(a: np.ndarray, s: np.ndarray, interleaver: Interleaver,
                   es: float, user_id: int = 0) -> TxFrame:
    """Concatenate the dictionary column and the interleaved BPSK symbols."""
    a = np.asarray(a, dtype=np.complex128)
    s = np.asarray(s, dtype=np.float64)
    if a.ndim != 1 or s.ndim != 1:
        raise PhyError("assemble_frame expects 1-D prefix and suffix")
    if s.size != interleaver.permutation.size:
        raise PhyError(
            f"suffix length {s.size} does not match interleaver length "
            f"{interleaver.permutation.size}"
        )
    scale = np.sqrt(es)
    symbols = np.concatenate([scale * a, scale * interleaver.interleave(s)])
    return TxFrame(user_id=user_id, cs_index=interleaver.pattern_id, symbols=symbols)


@dataclass(frozen=True)
class ChannelRealization:
    """Block-fading MIMO coefficients and receiver noise for one trial."""

    h: np.ndarray      # (ka, m) complex128, i.i.d. CN(0, 1)
    noise: np.ndarray  # (l_total, m) complex128, i.i.d. CN(0, noise_var)

    @staticmethod
    def draw(ka: int, m: int, l_total: int, noise_var: float,
             trial_seed: int) -> "ChannelRealization":
        rng_h = np.random.default_rng(mix_seed(trial_seed, "channel", 0))
        rng_z = np.random.default_rng(mix_seed(trial_seed, "noise", 0))
        h = (rng_h.standard_normal((ka, m)) + 1j * rng_h.standard_normal((ka, m)))
        h /= np.sqrt(2.0)
        z = (rng_z.standard_normal((l_total, m)) + 1j * rng_z.standard_normal((l_total, m)))
        z *= np.sqrt(noise_var / 2.0)
        return ChannelRealization(h=h, noise=z)

    @staticmethod
    def draw_for_config(cfg: SimConfig, trial_seed: int) -> "ChannelRealization":
        return ChannelRealization.draw(cfg.ka, cfg.m, cfg.l_total, cfg.noise_var,
                                       trial_seed)


def transmit(frames: list[TxFrame], chan: ChannelRealization) -> np.ndarray:
    """Superimpose all users through the channel: Y = sum_k v_k h_k^T + Z."""
    if len(frames) != chan.h.shape[0]:
        raise PhyError(
            f"{len(frames)} frames but channel has {chan.h.shape[0]} user rows"
        )
    l_total = chan.noise.shape[0]
    for f in frames:
        if f.symbols.size != l_total:
            raise PhyError(
                f"frame length {f.symbols.size} does not match {l_total} channel uses"
            )
    if not frames:
        return chan.noise.copy()
    v = np.stack([f.symbols for f in frames], axis=1)  # (l_total, ka)
    return v @ chan.h + chan.noise
