"""Interleavers, BPSK, frame assembly, and the MIMO channel."""

import numpy as np
import pytest

from urasim.channel import (
    ChannelRealization,
    Interleaver,
    PhyError,
    assemble_frame,
    bpsk_demodulate,
    bpsk_modulate,
    make_interleaver,
    transmit,
)

MASTER = 77


def test_interleaver_identity_for_single_symbol():
    pi = make_interleaver(3, 1, MASTER)
    assert pi.permutation.tolist() == [0]


def test_interleaver_roundtrip():
    pi = make_interleaver(12, 50, MASTER)
    rng = np.random.default_rng(0)
    for _ in range(1000):
        x = rng.standard_normal(50)
        assert np.array_equal(pi.deinterleave(pi.interleave(x)), x)
        assert np.array_equal(pi.interleave(pi.deinterleave(x)), x)


def test_interleaver_deterministic_and_distinct():
    a = make_interleaver(5, 200, MASTER)
    b = make_interleaver(5, 200, MASTER)
    c = make_interleaver(6, 200, MASTER)
    assert np.array_equal(a.permutation, b.permutation)
    assert not np.array_equal(a.permutation, c.permutation)


def test_bpsk_mapping():
    assert bpsk_modulate(np.array([1, 0, 1])).tolist() == [1.0, -1.0, 1.0]
    assert bpsk_modulate(np.zeros(4, dtype=np.uint8)).tolist() == [-1.0] * 4
    bits = np.random.default_rng(1).integers(0, 2, 64)
    assert np.array_equal(bpsk_demodulate(bpsk_modulate(bits)), bits)
    with pytest.raises(PhyError):
        bpsk_modulate(np.array([0, 2]))


def test_assemble_frame_identity_interleaver():
    pi = Interleaver(pattern_id=1, permutation=np.arange(4), inverse=np.arange(4))
    a = np.ones(3, dtype=complex)
    s = bpsk_modulate(np.array([1, 0, 1, 1]))
    frame = assemble_frame(a, s, pi, es=1.0, user_id=2)
    assert np.array_equal(frame.symbols, np.concatenate([a, s]).astype(complex))
    assert frame.user_id == 2 and frame.cs_index == 1


def test_assemble_frame_energy_accounting():
    lp, lc, es = 8, 16, 2.5
    rng = np.random.default_rng(2)
    a = rng.standard_normal(lp) + 1j * rng.standard_normal(lp)
    a *= np.sqrt(lp) / np.linalg.norm(a)
    s = bpsk_modulate(rng.integers(0, 2, lc))
    frame = assemble_frame(a, s, make_interleaver(4, lc, MASTER), es)
    prefix, suffix = frame.symbols[:lp], frame.symbols[lp:]
    assert np.linalg.norm(prefix) ** 2 == pytest.approx(es * lp, rel=1e-12)
    assert np.linalg.norm(frame.symbols) ** 2 == pytest.approx(es * (lp + lc), rel=1e-12)
    assert np.allclose(np.abs(suffix), np.sqrt(es))


def test_assemble_frame_length_mismatch():
    pi = make_interleaver(1, 8, MASTER)
    with pytest.raises(PhyError):
        assemble_frame(np.ones(4, complex), np.ones(7), pi, 1.0)


def test_channel_statistics():
    chan = ChannelRealization.draw(ka=400, m=300, l_total=4, noise_var=2.0,
                                   trial_seed=5)
    assert abs(np.mean(np.abs(chan.h) ** 2) - 1.0) < 0.02
    assert abs(np.mean(np.abs(chan.noise) ** 2) - 2.0) < 0.1
    again = ChannelRealization.draw(ka=400, m=300, l_total=4, noise_var=2.0,
                                    trial_seed=5)
    assert np.array_equal(chan.h, again.h)
    assert np.array_equal(chan.noise, again.noise)


def test_transmit_identity_channel():
    lp, lc, ka, m = 3, 5, 1, 2
    pi = make_interleaver(2, lc, MASTER)
    a = np.ones(lp, complex)
    s = bpsk_modulate(np.random.default_rng(3).integers(0, 2, lc))
    frame = assemble_frame(a, s, pi, es=1.0)
    chan = ChannelRealization(h=np.ones((ka, m), complex),
                              noise=np.zeros((lp + lc, m), complex))
    y = transmit([frame], chan)
    for col in range(m):
        assert np.allclose(y[:, col], frame.symbols)


def test_transmit_zero_users_returns_noise():
    chan = ChannelRealization(h=np.zeros((0, 3), complex),
                              noise=np.arange(12, dtype=float).reshape(4, 3) + 0j)
    y = transmit([], chan)
    assert np.array_equal(y, chan.noise)


def test_transmit_matches_bruteforce_superposition():
    ka, m, lp, lc = 3, 2, 2, 2
    rng = np.random.default_rng(4)
    frames = []
    for u in range(ka):
        a = rng.standard_normal(lp) + 1j * rng.standard_normal(lp)
        a *= np.sqrt(lp) / np.linalg.norm(a)
        s = bpsk_modulate(rng.integers(0, 2, lc))
        frames.append(assemble_frame(a, s, make_interleaver(u + 1, lc, MASTER),
                                     es=1.7, user_id=u))
    chan = ChannelRealization.draw(ka, m, lp + lc, noise_var=0.5, trial_seed=8)
    y = transmit(frames, chan)
    ref = chan.noise.copy()
    for u in range(ka):
        for i in range(lp + lc):
            for j in range(m):
                ref[i, j] += frames[u].symbols[i] * chan.h[u, j]
    assert np.abs(y - ref).max() < 1e-12


def test_transmit_dimension_mismatch():
    chan = ChannelRealization.draw(2, 2, 6, 1.0, trial_seed=1)
    frame = assemble_frame(np.ones(2, complex), np.ones(4),
                           make_interleaver(1, 4, MASTER), 1.0)
    with pytest.raises(PhyError):
        transmit([frame], chan)  # 1 frame vs 2 channel rows
