"""Shared complex dictionary for the compressed-sensing part of the encoder.

Every user maps its first b_p bits to one of 2^b_p columns; the column is
transmitted verbatim (scaled by the per-symbol energy) over the first l_p
channel uses.  Columns are i.i.d. circularly-symmetric complex Gaussian,
rescaled so every column carries exactly l_p units of energy.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Sequence

import numpy as np

MAX_BP = 24  # memory guard: 2^24 columns is the supported maximum

_MAGIC = b"URACBK01"


class CodebookError(ValueError):
    pass


@dataclass(frozen=True)
class Codebook:
    """Immutable l_p x 2^b_p complex dictionary."""

    columns: np.ndarray  # (l_p, 2^b_p) complex128
    seed: int
    lp: int
    bp: int

    @property
    def num_columns(self) -> int:
        return 1 << self.bp

    def column(self, index: int) -> np.ndarray:
        """Column for a 1-based codeword index."""
        if not 1 <= index <= self.num_columns:
            raise CodebookError(f"codeword index {index} out of [1, {self.num_columns}]")
        return self.columns[:, index - 1]


def generate_codebook(seed: int, lp: int, bp: int) -> Codebook:
    """Draw the dictionary deterministically from (seed, lp, bp).

    Entries are CN(0,1) i.i.d., then each column is rescaled to squared
    norm exactly lp.
    """
    if lp < 1:
        raise CodebookError(f"lp must be >= 1, got {lp}")
    if not 1 <= bp <= MAX_BP:
        raise CodebookError(f"bp must be in [1, {MAX_BP}], got {bp}")
    n = 1 << bp
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((lp, n)) + 1j * rng.standard_normal((lp, n))
    a /= np.sqrt(2.0)
    norms = np.linalg.norm(a, axis=0)
    a *= np.sqrt(lp) / norms
    return Codebook(columns=a, seed=seed, lp=lp, bp=bp)


def encode_cs(bits_p: np.ndarray) -> int:
    """Map b_p bits (big-endian) to a 1-based codeword index."""
    bits = np.asarray(bits_p)
    if bits.ndim != 1 or bits.size < 1:
        raise CodebookError("bits_p must be a non-empty 1-D bit vector")
    if not np.isin(bits, (0, 1)).all():
        raise CodebookError("bits_p must be binary")
    weights = 1 << np.arange(bits.size - 1, -1, -1, dtype=np.int64)
    return int(bits.astype(np.int64) @ weights) + 1


def decode_cs(index: int, bp: int) -> np.ndarray:
    """Inverse of encode_cs: 1-based index back to b_p big-endian bits."""
    if not 1 <= index <= (1 << bp):
        raise CodebookError(f"codeword index {index} out of [1, {1 << bp}]")
    value = index - 1
    bits = (value >> np.arange(bp - 1, -1, -1)) & 1
    return bits.astype(np.uint8)


def detect_collisions(indices: Sequence[int]) -> list[list[int]]:
    """Group user positions that picked the same codeword index.

    Singleton groups are omitted; groups are sorted by codeword index.
    """
    by_index: dict[int, list[int]] = {}
    for user, idx in enumerate(indices):
        by_index.setdefault(int(idx), []).append(user)
    return [users for idx, users in sorted(by_index.items()) if len(users) > 1]


def export_codebook(book: Codebook, path: str) -> None:
    """Write the dictionary to a binary file.

    Layout: 8-byte magic, u32 lp, u32 bp, u64 seed (all little-endian),
    then the columns in index order, each entry as interleaved
    real/imag float64 little-endian.
    """
    header = _MAGIC + struct.pack("<IIQ", book.lp, book.bp, book.seed & (2**64 - 1))
    flat = np.empty((book.num_columns * book.lp, 2), dtype="<f8")
    cols = book.columns.T  # column-contiguous on disk
    flat[:, 0] = cols.real.ravel()
    flat[:, 1] = cols.imag.ravel()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(flat.tobytes())


def codebook_to_bytes(book: Codebook) -> bytes:
    header = _MAGIC + struct.pack("<IIQ", book.lp, book.bp, book.seed & (2**64 - 1))
    flat = np.empty((book.num_columns * book.lp, 2), dtype="<f8")
    cols = book.columns.T
    flat[:, 0] = cols.real.ravel()
    flat[:, 1] = cols.imag.ravel()
    return header + flat.tobytes()


def import_codebook(path: str) -> Codebook:
    """Read a dictionary written by export_codebook, verifying the header."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:8] != _MAGIC:
        raise CodebookError(f"{path}: bad magic, not a codebook file")
    lp, bp, seed = struct.unpack("<IIQ", blob[8:24])
    n = 1 << bp
    expected = 24 + n * lp * 16
    if len(blob) != expected:
        raise CodebookError(
            f"{path}: truncated codebook ({len(blob)} bytes, expected {expected})"
        )
    flat = np.frombuffer(blob[24:], dtype="<f8").reshape(n * lp, 2)
    cols = (flat[:, 0] + 1j * flat[:, 1]).reshape(n, lp)
    return Codebook(columns=cols.T.copy(), seed=seed, lp=lp, bp=bp)
