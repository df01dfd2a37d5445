"""Scenario parameters, derived energies, and the deterministic seeding contract.

Every random draw in the simulator is keyed to a single 64-bit
``master_seed`` through :func:`mix_seed`.  Sub-seeds are derived as

    sub_seed = first 8 bytes (little-endian) of
               SHA-256( master_seed_le64 || purpose_utf8 || index_le64 )

which is stable across platforms and releases.  Purpose tags in use:
``"codebook"``, ``"ldpc"``, ``"interleaver"`` (index = codeword index),
``"trial:<axis>=<value>"`` (index = trial number), and within a trial
``"messages"``, ``"channel"``, ``"noise"`` keyed off the trial seed.
"""

from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass, fields
from typing import Any, Mapping

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

MASK64 = (1 << 64) - 1

ES_RULE_RATE_TIMES_EB = "rate_times_eb"
ES_RULE_EB_OVER_RATE = "eb_over_rate"


class ConfigError(ValueError):
    """Raised for out-of-range or inconsistent scenario parameters."""


def mix_seed(master_seed: int, purpose: str, index: int = 0) -> int:
    """Derive a stable 64-bit sub-seed from (master_seed, purpose, index)."""
    payload = (
        struct.pack("<Q", master_seed & MASK64)
        + purpose.encode("utf-8")
        + struct.pack("<Q", index & MASK64)
    )
    return int.from_bytes(hashlib.sha256(payload).digest()[:8], "little")


@dataclass(frozen=True)
class SimConfig:
    """All scenario parameters for one operating point. Immutable."""

    ka: int                 # active users
    m: int                  # BS antennas
    b_total: int            # message bits per user
    b_p: int                # bits carried by the dictionary index
    b_c: int                # bits carried by the LDPC codeword
    l_p: int                # channel uses of the dictionary part
    l_c: int                # channel uses of the LDPC part
    eb_n0_db: float         # energy per bit over noise, dB
    noise_var: float = 1.0  # complex noise variance per receive sample
    sparsity_prior: float = 0.1      # Bernoulli prior fed to the AMP denoiser
    activity_threshold: float = 0.5  # posterior threshold for declaring a row active
    amp_max_iter: int = 50
    amp_tol: float = 1e-6            # relative MSE stop for AMP
    bp_max_iter: int = 50
    sic_max_rounds: int = 8
    master_seed: int = 0
    symbol_energy_rule: str = ES_RULE_RATE_TIMES_EB

    @property
    def l_total(self) -> int:
        return self.l_p + self.l_c

    @property
    def num_codewords(self) -> int:
        return 1 << self.b_p


@dataclass(frozen=True)
class DerivedEnergy:
    """Quantities derived from a SimConfig; pure function of the config."""

    code_rate: float            # b_total / l_total
    symbol_energy: float        # transmit energy per channel use
    spectral_efficiency: float  # b_total * ka / (l_total * m)


_REQUIRED = ("ka", "m", "b_total", "b_p", "b_c", "l_p", "l_c", "eb_n0_db")
_INT_FIELDS = {
    "ka", "m", "b_total", "b_p", "b_c", "l_p", "l_c",
    "amp_max_iter", "bp_max_iter", "sic_max_rounds", "master_seed",
}


def build_config(raw: Mapping[str, Any]) -> SimConfig:
    """Validate a parameter map and return an immutable SimConfig.

    Unknown keys and violated invariants raise :class:`ConfigError`
    naming the offending field(s).
    """
    known = {f.name for f in fields(SimConfig)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"unknown config field(s): {', '.join(unknown)}")
    missing = [k for k in _REQUIRED if k not in raw]
    if missing:
        raise ConfigError(f"missing required config field(s): {', '.join(missing)}")

    kwargs: dict[str, Any] = {}
    for f in fields(SimConfig):
        if f.name not in raw:
            continue
        value = raw[f.name]
        if f.name in _INT_FIELDS:
            if isinstance(value, bool) or value != int(value):
                raise ConfigError(f"{f.name} must be an integer, got {value!r}")
            value = int(value)
        elif f.name != "symbol_energy_rule":
            value = float(value)
        kwargs[f.name] = value
    cfg = SimConfig(**kwargs)

    for name in ("ka", "m", "b_total", "b_p", "b_c", "l_p", "l_c"):
        if getattr(cfg, name) < 1:
            raise ConfigError(f"{name} must be >= 1, got {getattr(cfg, name)}")
    if cfg.b_p + cfg.b_c != cfg.b_total:
        raise ConfigError(
            f"bit split mismatch: b_p ({cfg.b_p}) + b_c ({cfg.b_c}) "
            f"!= b_total ({cfg.b_total})"
        )
    if cfg.l_p + cfg.l_c != cfg.l_total:  # defensive; l_total is derived
        raise ConfigError("channel-use split mismatch")
    if not 0.0 < cfg.sparsity_prior < 1.0:
        raise ConfigError(f"sparsity_prior must be in (0,1), got {cfg.sparsity_prior}")
    if not 0.0 < cfg.activity_threshold < 1.0:
        raise ConfigError(
            f"activity_threshold must be in (0,1), got {cfg.activity_threshold}"
        )
    if cfg.noise_var <= 0.0:
        raise ConfigError(f"noise_var must be positive, got {cfg.noise_var}")
    if cfg.amp_tol <= 0.0:
        raise ConfigError(f"amp_tol must be positive, got {cfg.amp_tol}")
    for name in ("amp_max_iter", "bp_max_iter", "sic_max_rounds"):
        if getattr(cfg, name) < 1:
            raise ConfigError(f"{name} must be >= 1, got {getattr(cfg, name)}")
    if not 0 <= cfg.master_seed <= MASK64:
        raise ConfigError("master_seed must fit in 64 bits")
    if cfg.symbol_energy_rule not in (ES_RULE_RATE_TIMES_EB, ES_RULE_EB_OVER_RATE):
        raise ConfigError(
            f"symbol_energy_rule must be '{ES_RULE_RATE_TIMES_EB}' or "
            f"'{ES_RULE_EB_OVER_RATE}', got {cfg.symbol_energy_rule!r}"
        )
    return cfg


def derive_energy(cfg: SimConfig) -> DerivedEnergy:
    """Compute code rate, per-symbol energy, and spectral efficiency.

    The default per-symbol energy rule spreads the total per-user budget
    b_total * Eb over l_total channel uses (Es = R * Eb).  The alternative
    rule Es = Eb / R can be forced via ``symbol_energy_rule``.
    """
    rate = cfg.b_total / cfg.l_total
    eb = 10.0 ** (cfg.eb_n0_db / 10.0) * cfg.noise_var
    if cfg.symbol_energy_rule == ES_RULE_RATE_TIMES_EB:
        es = rate * eb
    else:
        es = eb / rate
    mu = cfg.b_total * cfg.ka / (cfg.l_total * cfg.m)
    return DerivedEnergy(code_rate=rate, symbol_energy=es, spectral_efficiency=mu)


def _flatten(tree: Mapping[str, Any], prefix: str = "") -> dict[str, Any]:
    flat: dict[str, Any] = {}
    for key, value in tree.items():
        name = f"{prefix}{key}"
        if isinstance(value, Mapping):
            flat.update(_flatten(value, f"{name}_"))
        else:
            flat[name] = value
    return flat


def load_config_file(path: str) -> dict[str, Any]:
    """Read a TOML config file into a flat parameter map.

    Nested sections are flattened by joining keys with underscores, so
    ``[amp] max_iter = 40`` and a top-level ``amp_max_iter = 40`` are
    equivalent.
    """
    with open(path, "rb") as fh:
        try:
            tree = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"cannot parse config file {path}: {exc}") from exc
    return _flatten(tree)


def config_to_dict(cfg: SimConfig) -> dict[str, Any]:
    """Plain-dict form of a config (inverse of build_config)."""
    return {f.name: getattr(cfg, f.name) for f in fields(SimConfig)}


def canonical_axis_value(axis: str, value: float) -> str:
    """Stable string form of a sweep-axis value used in seed derivation."""
    if axis == "antennas":
        return repr(int(value))
    v = float(value)
    if math.isnan(v) or math.isinf(v):
        raise ConfigError(f"axis value must be finite, got {value!r}")
    return repr(v)
