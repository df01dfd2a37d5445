"""HTTP face of the simulator: trials, sweeps, and artifact exports.

Sweeps run synchronously in the request handler; clients submitting long
sweeps should disable their read timeout.  All endpoints are
deterministic functions of the request body.
"""

from __future__ import annotations

import dataclasses

from fastapi import FastAPI
from fastapi.responses import JSONResponse, PlainTextResponse, Response

from .. import __version__
from ..amp import AmpError
from ..codebook import CodebookError, codebook_to_bytes
from ..config import ConfigError, derive_energy, mix_seed
from ..harness import (
    HarnessError,
    build_sweep_plan,
    codebook_for_config,
    ldpc_for_config,
    plan_to_dict,
    run_sweep,
    run_trial,
)
from ..ldpc import LdpcError, alist_text
from . import models


def create_app() -> FastAPI:
    app = FastAPI(title="urasim", version=__version__)

    @app.exception_handler(ConfigError)
    @app.exception_handler(HarnessError)
    @app.exception_handler(LdpcError)
    @app.exception_handler(CodebookError)
    @app.exception_handler(AmpError)
    async def _domain_error(_request, exc):
        return JSONResponse(status_code=422, content={"detail": str(exc)})

    @app.get("/health", response_model=models.HealthResponse)
    def health() -> models.HealthResponse:
        return models.HealthResponse(status="ok", version=__version__)

    @app.post("/config/validate", response_model=models.ConfigValidation)
    def validate_config(config: models.SimConfigModel) -> models.ConfigValidation:
        cfg = config.to_config()
        derived = derive_energy(cfg)
        return models.ConfigValidation(
            config=models.SimConfigModel(**dataclasses.asdict(cfg)),
            derived=models.DerivedEnergyModel(**dataclasses.asdict(derived)),
        )

    @app.post("/trials/run", response_model=models.TrialResponse,
              response_model_exclude_none=True)
    def trial(request: models.TrialRequest) -> models.TrialResponse:
        cfg = request.config.to_config()
        seed = request.seed
        if seed is None:
            seed = mix_seed(cfg.master_seed, "trial:single", 0)
        result = run_trial(cfg, request.variant, seed, debug=request.debug)
        return models.TrialResponse(**dataclasses.asdict(result))

    @app.post("/sweeps/run", response_model=models.SweepResponse)
    def sweep(request: models.SweepRequest) -> models.SweepResponse:
        plan = build_sweep_plan(request.config.to_config(), request.axis,
                                request.grid, request.trials_per_point,
                                request.variant)
        rows = run_sweep(plan, worker_count=request.workers)
        return models.SweepResponse(
            version=__version__,
            plan=plan_to_dict(plan),
            rows=[models.SweepRowModel(**dataclasses.asdict(r)) for r in rows],
        )

    @app.post("/codebook/export")
    def codebook_export(request: models.CodebookRequest) -> Response:
        cfg = request.config.to_config()
        blob = codebook_to_bytes(codebook_for_config(cfg))
        return Response(content=blob, media_type="application/octet-stream")

    @app.post("/ldpc/export", response_class=PlainTextResponse)
    def ldpc_export(request: models.LdpcExportRequest) -> str:
        cfg = request.config.to_config()
        return alist_text(ldpc_for_config(cfg))

    return app


app = create_app()
