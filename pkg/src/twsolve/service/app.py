"""HTTP service wrapping the solver pipeline.

Run with:  uvicorn twsolve.service:app
The pipeline is pure and deterministic, so concurrent requests are safe.
"""
from __future__ import annotations

import json

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..pde_parser import render_expr
from ..pipeline import (PipelineConfig, PipelineError, run_balance,
                        run_catalog, run_reduce, run_solve)
from ..solutions import ALL_KINDS, BranchKind, render_families
from . import schemas

app = FastAPI(
    title="twsolve",
    description="Traveling-wave solution families for coupled evolution systems",
    version=__version__,
)


def _bad_request(exc: PipelineError) -> HTTPException:
    return HTTPException(status_code=400,
                         detail={"message": str(exc), "exit_code": exc.exit_code})


@app.get("/health", response_model=schemas.HealthResponse)
def health() -> schemas.HealthResponse:
    return schemas.HealthResponse(status="ok", version=__version__)


@app.post("/solve", response_model=schemas.SolveResponse)
def solve(req: schemas.SolveRequest) -> schemas.SolveResponse:
    kinds = ALL_KINDS
    if req.kinds is not None:
        try:
            kinds = tuple(BranchKind(k) for k in req.kinds)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
    degrees = None
    if req.degrees is not None:
        if not 1 <= len(req.degrees) <= 2:
            raise HTTPException(status_code=422,
                                detail="degrees must be [m] or [m, n]")
        degrees = (req.degrees[0],
                   req.degrees[1] if len(req.degrees) == 2 else None)
    for mode in req.verify:
        if mode not in ("symbolic", "numeric"):
            raise HTTPException(status_code=422,
                                detail=f"unknown verify mode {mode!r}")
    config = PipelineConfig(source=req.source, wave_speed=req.wave_speed,
                            degrees=degrees, kinds=kinds,
                            verify_modes=tuple(req.verify),
                            bindings=dict(req.bind), tol=req.tol,
                            max_depth=req.max_depth,
                            max_branches=req.max_branches)
    try:
        result = run_solve(config)
    except PipelineError as exc:
        raise _bad_request(exc)
    doc = json.loads(render_families(result.report, "json"))
    doc["exit_code"] = result.exit_code
    return schemas.SolveResponse(**doc)


@app.post("/reduce", response_model=schemas.ReduceResponse)
def reduce(req: schemas.ReduceRequest) -> schemas.ReduceResponse:
    try:
        _, ode = run_reduce(req.source, req.wave_speed)
    except PipelineError as exc:
        raise _bad_request(exc)
    return schemas.ReduceResponse(
        wave_speed=ode.wave_speed,
        unknowns=list(ode.unknowns),
        equations=[render_expr(e) for e in ode.equations],
        latex=[render_expr(e, "latex") for e in ode.equations],
        scales=[str(s) for s in ode.scales],
    )


@app.post("/balance", response_model=schemas.BalanceModel)
def balance(req: schemas.BalanceRequest) -> schemas.BalanceModel:
    try:
        m, n = run_balance(req.source, req.wave_speed)
    except PipelineError as exc:
        raise _bad_request(exc)
    return schemas.BalanceModel(m=m, n=n)


@app.post("/catalog", response_model=schemas.CatalogResponse)
def catalog(req: schemas.CatalogRequest) -> schemas.CatalogResponse:
    try:
        summary = run_catalog(req.source, dict(req.bind), req.tol)
    except PipelineError as exc:
        raise _bad_request(exc)
    return schemas.CatalogResponse(
        rows=[schemas.CatalogRow(id=r.id, kind=r.kind, status=r.status,
                                 printed_residual=r.printed_residual,
                                 correction=r.correction,
                                 corrected_residual=r.corrected_residual)
              for r in summary.rows],
        passed_as_printed=summary.passed_as_printed,
        all_accounted=summary.all_accounted,
        notes=summary.notes,
    )
