"""Request and response schemas for the simulation service."""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field

from ..config import ES_RULE_EB_OVER_RATE, ES_RULE_RATE_TIMES_EB, SimConfig, build_config


class SimConfigModel(BaseModel):
    ka: int
    m: int
    b_total: int
    b_p: int
    b_c: int
    l_p: int
    l_c: int
    eb_n0_db: float
    noise_var: float = 1.0
    sparsity_prior: float = 0.1
    activity_threshold: float = 0.5
    amp_max_iter: int = 50
    amp_tol: float = 1e-6
    bp_max_iter: int = 50
    sic_max_rounds: int = 8
    master_seed: int = 0
    symbol_energy_rule: Literal[ES_RULE_RATE_TIMES_EB, ES_RULE_EB_OVER_RATE] = (
        ES_RULE_RATE_TIMES_EB
    )

    def to_config(self) -> SimConfig:
        # route through build_config so service and library reject identically
        return build_config(self.model_dump())


class DerivedEnergyModel(BaseModel):
    code_rate: float
    symbol_energy: float
    spectral_efficiency: float


class ConfigValidation(BaseModel):
    config: SimConfigModel
    derived: DerivedEnergyModel


class TrialRequest(BaseModel):
    config: SimConfigModel
    variant: Literal["ldpc", "ldpc_sic"] = "ldpc_sic"
    seed: Optional[int] = Field(
        default=None,
        description="Explicit trial seed; derived from master_seed when omitted.",
    )
    debug: bool = False


class TrialResponse(BaseModel):
    seed: int
    truth: list[str]
    recovered: list[str]
    p_md: float
    p_fa: float
    amp_iterations: int
    bp_iterations: int
    sic_rounds: int
    collision_count: int
    flag: Optional[str] = None
    wall_time: float
    amp_trace: Optional[list[dict]] = None
    bp_trace: Optional[list[dict]] = None


class SweepRequest(BaseModel):
    config: SimConfigModel
    axis: Literal["eb_n0_db", "antennas"]
    grid: list[float]
    trials_per_point: int
    variant: Literal["ldpc", "ldpc_sic"] = "ldpc_sic"
    workers: int = 1


class SweepRowModel(BaseModel):
    axis_value: float
    trials: int
    p_md: float
    p_fa: float
    pe: float
    ci_halfwidth: float


class SweepResponse(BaseModel):
    version: str
    plan: dict
    rows: list[SweepRowModel]


class CodebookRequest(BaseModel):
    config: SimConfigModel


class LdpcExportRequest(BaseModel):
    config: SimConfigModel


class HealthResponse(BaseModel):
    status: str
    version: str
