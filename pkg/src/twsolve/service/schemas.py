"""Pydantic request/response models for the HTTP service."""
from __future__ import annotations

from pydantic import BaseModel, Field


class SolveRequest(BaseModel):
    source: str = Field(description="System description in the input language")
    wave_speed: str = "lambda"
    degrees: list[int] | None = None
    kinds: list[str] | None = None
    verify: list[str] = ["symbolic", "numeric"]
    bind: dict[str, float] = {}
    tol: float = 1e-8
    max_depth: int = 32
    max_branches: int = 512


class VerifiedNumeric(BaseModel):
    max_residual: float
    params: dict[str, float]


class FamilyModel(BaseModel):
    id: str
    assignment: dict[str, str]
    constraints: list[str]
    free: list[str]
    branch_kind: str
    u: str
    v: str | None
    latex_u: str
    latex_v: str | None
    verified_symbolic: bool | None
    verified_numeric: VerifiedNumeric | None


class BalanceModel(BaseModel):
    m: int
    n: int | None


class SearchModel(BaseModel):
    complete: bool
    branches_explored: int


class SolveResponse(BaseModel):
    system: str
    balance: BalanceModel
    families: list[FamilyModel]
    search: SearchModel
    exit_code: int


class ReduceRequest(BaseModel):
    source: str
    wave_speed: str = "lambda"


class ReduceResponse(BaseModel):
    wave_speed: str
    unknowns: list[str]
    equations: list[str]
    latex: list[str]
    scales: list[str]


class BalanceRequest(BaseModel):
    source: str
    wave_speed: str = "lambda"


class CatalogRequest(BaseModel):
    source: str | None = None
    bind: dict[str, float] = {}
    tol: float = 1e-8


class CatalogRow(BaseModel):
    id: str
    kind: str
    status: str
    printed_residual: float | None
    correction: str | None
    corrected_residual: float | None


class CatalogResponse(BaseModel):
    rows: list[CatalogRow]
    passed_as_printed: int
    all_accounted: bool
    notes: list[str]


class HealthResponse(BaseModel):
    status: str
    version: str
