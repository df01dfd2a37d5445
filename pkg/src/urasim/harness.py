"""Monte Carlo driver: seeded trials, sweeps over Eb/N0 or antenna grids, CSV output.

Per-trial seeds are derived up front from the master seed, the axis value,
and the trial index, so adding grid points or changing the worker count
never perturbs existing results.  Aggregation runs in trial-index order,
which makes sweep output byte-identical for any worker count.
"""

from __future__ import annotations

import csv
import dataclasses
import functools
import io
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from . import __version__
from .amp import AmpDivergenceError, CsEstimate, amp_iterate, detect_active
from .channel import (
    ChannelRealization,
    assemble_frame,
    bpsk_modulate,
    make_interleaver,
    transmit,
)
from .codebook import Codebook, detect_collisions, encode_cs, generate_codebook
from .config import (
    ConfigError,
    SimConfig,
    build_config,
    canonical_axis_value,
    config_to_dict,
    derive_energy,
    mix_seed,
)
from .ldpc import LdpcCode, build_ldpc, ldpc_encode
from .sic import compute_metrics, run_sic, stitch

VARIANT_LDPC = "ldpc"        # single joint-BP round, no outer cancellation
VARIANT_LDPC_SIC = "ldpc_sic"
VARIANTS = (VARIANT_LDPC, VARIANT_LDPC_SIC)

AXIS_EB_N0 = "eb_n0_db"
AXIS_ANTENNAS = "antennas"
AXES = (AXIS_EB_N0, AXIS_ANTENNAS)

CSV_HEADER = ["axis_value", "trials", "p_md", "p_fa", "pe", "ci_halfwidth"]
_Z95 = 1.959963984540054  # two-sided 95% normal quantile


@dataclass(frozen=True)
class SweepPlan:
    """A grid of operating points sharing one base config."""

    base: SimConfig
    axis: str                 # "eb_n0_db" or "antennas"
    grid: tuple[float, ...]   # strictly increasing axis values
    trials_per_point: int
    decoder_variant: str = VARIANT_LDPC_SIC


@dataclass
class TrialResult:
    """Everything observed in one end-to-end trial."""

    seed: int
    truth: list[str]          # transmitted messages as bit strings
    recovered: list[str]
    p_md: float
    p_fa: float
    amp_iterations: int
    bp_iterations: int
    sic_rounds: int
    collision_count: int      # users sharing a codeword index with someone
    flag: str | None = None   # set when the trial hit a decoder diagnostic
    wall_time: float = field(default=0.0, compare=False)
    amp_trace: list[dict] | None = field(default=None, compare=False)
    bp_trace: list[dict] | None = field(default=None, compare=False)


@dataclass(frozen=True)
class SweepRow:
    axis_value: float
    trials: int
    p_md: float
    p_fa: float
    pe: float
    ci_halfwidth: float


class HarnessError(ValueError):
    pass


@functools.lru_cache(maxsize=8)
def _cached_codebook(seed: int, lp: int, bp: int) -> Codebook:
    return generate_codebook(seed, lp, bp)


@functools.lru_cache(maxsize=8)
def _cached_ldpc(lc: int, bc: int, seed: int) -> LdpcCode:
    return build_ldpc(lc, bc, seed)


def codebook_for_config(cfg: SimConfig) -> Codebook:
    return _cached_codebook(mix_seed(cfg.master_seed, "codebook", 0), cfg.l_p, cfg.b_p)


def ldpc_for_config(cfg: SimConfig) -> LdpcCode:
    return _cached_ldpc(cfg.l_c, cfg.b_c, mix_seed(cfg.master_seed, "ldpc", 0))


def run_trial(cfg: SimConfig, variant: str, trial_seed: int,
              debug: bool = False) -> TrialResult:
    """Draw messages, push them through the channel, decode, and score."""
    if variant not in VARIANTS:
        raise HarnessError(f"unknown decoder variant {variant!r}")
    start = time.perf_counter()
    book = codebook_for_config(cfg)
    code = ldpc_for_config(cfg)
    energy = derive_energy(cfg)
    es = energy.symbol_energy

    msg_rng = np.random.default_rng(mix_seed(trial_seed, "messages", 0))
    bits = msg_rng.integers(0, 2, size=(cfg.ka, cfg.b_total), dtype=np.uint8)
    indices = [encode_cs(bits[u, :cfg.b_p]) for u in range(cfg.ka)]
    collision_groups = detect_collisions(indices)
    collision_count = sum(len(g) for g in collision_groups)

    frames = []
    for u in range(cfg.ka):
        codeword = ldpc_encode(bits[u, cfg.b_p:], code)
        pi = make_interleaver(indices[u], cfg.l_c, cfg.master_seed)
        frames.append(assemble_frame(book.column(indices[u]),
                                     bpsk_modulate(codeword), pi, es, user_id=u))
    chan = ChannelRealization.draw_for_config(cfg, trial_seed)
    y = transmit(frames, chan)
    yp, yc = y[:cfg.l_p], y[cfg.l_p:]

    amp_trace: list[dict] | None = [] if debug else None
    bp_trace: list[dict] | None = [] if debug else None
    flag = None
    try:
        state, _ = amp_iterate(np.sqrt(es) * book.columns, yp, cfg, trace=amp_trace)
        cs_est = detect_active(state, cfg)
        amp_iterations = state.iteration
    except AmpDivergenceError as exc:
        flag = str(exc)
        cs_est = CsEstimate(detected=np.zeros(0, np.int64),
                            h_hat=np.zeros((0, cfg.m), np.complex128),
                            posteriors=np.zeros(0))
        amp_iterations = exc.iteration

    rounds_cap = 1 if variant == VARIANT_LDPC else cfg.sic_max_rounds
    sic_state = run_sic(yc, cs_est, code, cfg, max_rounds=rounds_cap, trace=bp_trace)
    recovered = stitch(cs_est, sic_state, code, cfg.b_p)
    p_md, p_fa = compute_metrics([bits[u] for u in range(cfg.ka)], recovered)

    return TrialResult(
        seed=trial_seed,
        truth=["".join(str(b) for b in bits[u]) for u in range(cfg.ka)],
        recovered=[r.as_string() for r in recovered],
        p_md=p_md,
        p_fa=p_fa,
        amp_iterations=amp_iterations,
        bp_iterations=sic_state.bp_iterations,
        sic_rounds=sic_state.round,
        collision_count=collision_count,
        flag=flag,
        wall_time=time.perf_counter() - start,
        amp_trace=amp_trace,
        bp_trace=bp_trace,
    )


def build_sweep_plan(raw_base: Mapping[str, Any], axis: str, grid: list[float],
                     trials_per_point: int,
                     decoder_variant: str = VARIANT_LDPC_SIC) -> SweepPlan:
    base = raw_base if isinstance(raw_base, SimConfig) else build_config(raw_base)
    if axis not in AXES:
        raise HarnessError(f"axis must be one of {AXES}, got {axis!r}")
    if not grid:
        raise HarnessError("sweep grid must be nonempty")
    values = [float(v) for v in grid]
    if any(b <= a for a, b in zip(values, values[1:])):
        raise HarnessError("sweep grid must be strictly increasing")
    if trials_per_point < 1:
        raise HarnessError("trials_per_point must be >= 1")
    if decoder_variant not in VARIANTS:
        raise HarnessError(f"unknown decoder variant {decoder_variant!r}")
    return SweepPlan(base=base, axis=axis, grid=tuple(values),
                     trials_per_point=trials_per_point,
                     decoder_variant=decoder_variant)


def config_at(plan: SweepPlan, value: float) -> SimConfig:
    if plan.axis == AXIS_EB_N0:
        return dataclasses.replace(plan.base, eb_n0_db=float(value))
    m = int(value)
    if m != value or m < 1:
        raise HarnessError(f"antenna axis values must be positive integers, got {value}")
    return dataclasses.replace(plan.base, m=m)


def trial_seeds(plan: SweepPlan, value: float) -> list[int]:
    tag = f"trial:{plan.axis}={canonical_axis_value(plan.axis, value)}"
    master = plan.base.master_seed
    return [mix_seed(master, tag, i) for i in range(plan.trials_per_point)]


def _trial_worker(args: tuple[dict, str, int]) -> tuple[float, float]:
    cfg_dict, variant, seed = args
    result = run_trial(build_config(cfg_dict), variant, seed)
    return result.p_md, result.p_fa


def run_sweep(plan: SweepPlan, worker_count: int = 1) -> list[SweepRow]:
    """Run every grid point; aggregation is invariant to the worker count."""
    if worker_count < 1:
        raise HarnessError("worker_count must be >= 1")
    rows = []
    for value in plan.grid:
        cfg = config_at(plan, value)
        seeds = trial_seeds(plan, value)
        jobs = [(config_to_dict(cfg), plan.decoder_variant, s) for s in seeds]
        if worker_count == 1 or len(jobs) == 1:
            outcomes = [_trial_worker(j) for j in jobs]
        else:
            with ProcessPoolExecutor(max_workers=worker_count) as pool:
                outcomes = list(pool.map(_trial_worker, jobs, chunksize=8))
        rows.append(_aggregate(plan, value, cfg, outcomes))
    return rows


def _aggregate(plan: SweepPlan, value: float, cfg: SimConfig,
               outcomes: list[tuple[float, float]]) -> SweepRow:
    n = len(outcomes)
    p_md = sum(o[0] for o in outcomes) / n
    p_fa = sum(o[1] for o in outcomes) / n
    # normal approximation on per-user events, misdetection and false-alarm
    # variances added: approximate, flagged as such in the docs
    events = cfg.ka * n
    var = p_md * (1.0 - p_md) / events + p_fa * (1.0 - p_fa) / events
    return SweepRow(axis_value=float(value), trials=n, p_md=p_md, p_fa=p_fa,
                    pe=p_md + p_fa, ci_halfwidth=_Z95 * np.sqrt(max(var, 0.0)))


def rows_to_csv(rows: list[SweepRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow([
            repr(row.axis_value), row.trials, repr(row.p_md), repr(row.p_fa),
            repr(row.pe), repr(row.ci_halfwidth),
        ])
    return buf.getvalue()


def plan_to_dict(plan: SweepPlan) -> dict[str, Any]:
    return {
        "base": config_to_dict(plan.base),
        "axis": plan.axis,
        "grid": list(plan.grid),
        "trials_per_point": plan.trials_per_point,
        "decoder_variant": plan.decoder_variant,
    }


def plan_from_dict(raw: Mapping[str, Any]) -> SweepPlan:
    try:
        return build_sweep_plan(raw["base"], raw["axis"], raw["grid"],
                                raw["trials_per_point"],
                                raw.get("decoder_variant", VARIANT_LDPC_SIC))
    except KeyError as exc:
        raise HarnessError(f"sweep plan is missing key {exc}") from exc


def emit_results(rows: list[SweepRow], plan: SweepPlan, out_dir: str) -> tuple[str, str]:
    """Write results.csv plus a JSON sidecar with the plan and code version."""
    import os

    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, "results.csv")
    json_path = os.path.join(out_dir, "results.json")
    try:
        with open(csv_path, "w", encoding="ascii", newline="") as fh:
            fh.write(rows_to_csv(rows))
        sidecar = {
            "version": __version__,
            "plan": plan_to_dict(plan),
            "rows": [dataclasses.asdict(r) for r in rows],
        }
        with open(json_path, "w", encoding="ascii") as fh:
            json.dump(sidecar, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise HarnessError(f"cannot write results under {out_dir}: {exc}") from exc
    return csv_path, json_path


def load_plan_file(path: str) -> SweepPlan:
    """Read a sweep plan file: a [config] table plus a [sweep] table."""
    from .config import load_config_file

    flat = load_config_file(path)
    sweep_keys = {k: flat.pop(k) for k in list(flat)
                  if k.startswith("sweep_")}
    base = {k[len("config_"):] if k.startswith("config_") else k: v
            for k, v in flat.items()}
    try:
        axis = sweep_keys["sweep_axis"]
        grid = sweep_keys["sweep_grid"]
        trials = sweep_keys["sweep_trials_per_point"]
    except KeyError as exc:
        raise ConfigError(f"sweep plan file is missing {exc} under [sweep]") from exc
    variant = sweep_keys.get("sweep_variant", VARIANT_LDPC_SIC)
    return build_sweep_plan(base, axis, grid, int(trials), variant)
