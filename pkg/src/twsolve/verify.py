"""Two-tier verification of closed-form solutions.

Symbolic: a branch must annihilate every collected coefficient equation.
Numeric: the closed forms are substituted into the original equations,
all derivatives are taken exactly, and the residuals are sampled on a
guarded grid; points too close to a pole of tan/cot/coth (or to a zero
denominator) are skipped and recorded.

A catalog of printed solution pairs ships as a data file in the input
expression syntax, together with correction readings for entries whose
printed form disagrees with the solver's verified branch; the pass /
corrected attribution is produced by running the residual check, never
asserted a priori.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources

from . import symexpr as sx
from .algsolve import check_assignment
from .pde_parser import (ExprContext, PDESystem, SQRT_NEG, SQRT_POS,
                         parse_expr, render_expr)
from .phi_calculus import AlgebraicSystem, RICCATI_K
from .solutions import BranchKind, SolutionFamily
from .symexpr import Deriv, Expr, Func, Power, Product, Sum, Symbol

__all__ = [
    "VerificationReport", "NumericConfig", "InconclusiveError",
    "verify_symbolic", "verify_numeric", "pde_residual_exprs",
    "CatalogEntry", "CatalogRow", "CatalogSummary", "load_catalog",
    "catalog_check", "DEFAULT_GRID_X", "DEFAULT_GRID_T",
]

DEFAULT_GRID_X = (-2.0, -1.1, 0.3, 1.1, 2.0)
DEFAULT_GRID_T = (0.0, 0.25, 0.7)
DEFAULT_GUARD = 0.05
DEFAULT_TOL = 1e-8
DEFAULT_FREE_VALUE = 0.4  # 2/5, used for any symbol without an explicit binding


class InconclusiveError(Exception):
    """Every grid point was skipped; the check neither passes nor fails."""


@dataclass
class NumericConfig:
    params: dict[str, float] = field(default_factory=lambda: {"eta": 1 / 3})
    grid_x: tuple[float, ...] = DEFAULT_GRID_X
    grid_t: tuple[float, ...] = DEFAULT_GRID_T
    tol: float = DEFAULT_TOL
    guard: float = DEFAULT_GUARD


@dataclass
class VerificationReport:
    symbolic_ok: bool | None
    numeric_max_residual: float
    sample_params: dict[str, float]
    grid: list[tuple[float, float]]
    skipped: list[tuple[tuple[float, float], str]]


def verify_symbolic(branch, sys: AlgebraicSystem) -> bool:
    """True iff all collected coefficient equations vanish identically."""
    return check_assignment(sys, branch)


# ---------------------------------------------------------------------------
# Numeric residuals
# ---------------------------------------------------------------------------

def pde_residual_exprs(pde: PDESystem, closed: dict[str, Expr]) -> list[Expr]:
    """Substitute closed forms into the equations, expanding every
    derivative exactly."""

    def realize(e: Expr) -> Expr:
        if isinstance(e, Symbol):
            return closed.get(e.name, e)
        if isinstance(e, Deriv):
            inner = realize(e.arg)
            for var in e.wrt:
                inner = sx.differentiate(inner, var)
            return inner
        if isinstance(e, Sum):
            return sx.add(*[realize(t) for t in e.terms])
        if isinstance(e, Product):
            return sx.mul(*[realize(f) for f in e.factors])
        if isinstance(e, Power):
            return sx.pow_(realize(e.base), e.exponent)
        if isinstance(e, Func):
            return sx.func(e.kind, realize(e.arg))
        return e

    return [realize(eq) for eq in pde.equations]


def _kind_bindings(kind: BranchKind | None,
                   params: dict[str, float]) -> dict[str, float]:
    """Fill in k by sign regime plus the square-root auxiliary symbols."""
    out = dict(params)
    if kind is not None and kind is not BranchKind.RATIONAL:
        out.setdefault(RICCATI_K, float(kind.k_sign))
    k = out.get(RICCATI_K)
    if k is not None:
        if k > 0:
            out.setdefault(SQRT_POS, math.sqrt(k))
        elif k < 0:
            out.setdefault(SQRT_NEG, math.sqrt(-k))
    return out


def _pole_distance(e: Expr, bindings: dict[str, float]) -> float:
    """Smallest distance from any tan/cot/coth argument (or reciprocal
    base) to its pole lattice."""
    best = math.inf

    def visit(e: Expr) -> None:
        nonlocal best
        if isinstance(e, Func):
            a = sx.eval_numeric(e.arg, bindings)
            if e.kind == "tan":
                best = min(best, abs(math.pi * _dist_to_int(a / math.pi - 0.5)))
            elif e.kind == "cot":
                best = min(best, abs(math.pi * _dist_to_int(a / math.pi)))
            elif e.kind == "coth":
                best = min(best, abs(a))
            visit(e.arg)
        elif isinstance(e, Power):
            if e.exponent < 0:
                best = min(best, abs(sx.eval_numeric(e.base, bindings)))
            visit(e.base)
        elif isinstance(e, Sum):
            for t in e.terms:
                visit(t)
        elif isinstance(e, Product):
            for f in e.factors:
                visit(f)

    visit(e)
    return best


def _dist_to_int(x: float) -> float:
    return x - round(x)


def verify_numeric(family: SolutionFamily, pde: PDESystem,
                   config: NumericConfig | None = None,
                   symbolic_ok: bool | None = None) -> VerificationReport:
    """Max absolute residual of both equations over the guarded grid."""
    config = config or NumericConfig()
    closed = {pde.function_names[0]: family.u_closed}
    if family.v_closed is not None and len(pde.function_names) > 1:
        closed[pde.function_names[1]] = family.v_closed
    residuals = pde_residual_exprs(pde, closed)
    bindings = _kind_bindings(family.kind, config.params)
    return _grid_check(residuals, bindings, config, symbolic_ok)


def _grid_check(residuals: list[Expr], bindings: dict[str, float],
                config: NumericConfig,
                symbolic_ok: bool | None = None) -> VerificationReport:
    needed = set().union(*[sx.free_symbols(r) for r in residuals]) - {"x", "t"}
    full = dict(bindings)
    for name in sorted(needed):
        full.setdefault(name, DEFAULT_FREE_VALUE)

    grid = []
    skipped = []
    max_residual = 0.0
    for xv in config.grid_x:
        for tv in config.grid_t:
            point = {**full, "x": xv, "t": tv}
            try:
                dist = min(_pole_distance(r, point) for r in residuals)
                if dist < config.guard:
                    skipped.append(((xv, tv), f"within {config.guard} of a pole"))
                    continue
                vals = [abs(sx.eval_numeric(r, point)) for r in residuals]
            except sx.EvaluationSingularError as exc:
                skipped.append(((xv, tv), f"singular: {exc}"))
                continue
            grid.append((xv, tv))
            max_residual = max(max_residual, *vals)
    if not grid:
        raise InconclusiveError("every grid point was skipped near a pole")
    sample = {n: v for n, v in sorted(full.items()) if not n.startswith("@")}
    return VerificationReport(symbolic_ok=symbolic_ok,
                              numeric_max_residual=max_residual,
                              sample_params=sample, grid=grid, skipped=skipped)


# ---------------------------------------------------------------------------
# Printed-solution catalog
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CatalogCorrection:
    label: str
    u: Expr | None
    v: Expr | None
    note: str


@dataclass(frozen=True)
class CatalogEntry:
    id: str
    kind: BranchKind
    u: Expr
    v: Expr
    corrections: tuple[CatalogCorrection, ...]


@dataclass
class CatalogRow:
    id: str
    kind: str
    status: str                     # "pass" | "corrected" | "fail"
    printed_residual: float | None
    correction: str | None = None
    corrected_residual: float | None = None


@dataclass
class CatalogSummary:
    rows: list[CatalogRow]
    notes: list[str]

    @property
    def passed_as_printed(self) -> int:
        return sum(1 for r in self.rows if r.status == "pass")

    @property
    def all_accounted(self) -> bool:
        return all(r.status in ("pass", "corrected") for r in self.rows)


_CATALOG_CTX = ExprContext(symbols=("x", "t", "k", "eta", "a0"),
                           allow_deriv=False, allow_funcs=True)


def load_catalog() -> list[CatalogEntry]:
    text = (resources.files("twsolve.data") / "catalog_mkdv.dsl").read_text()
    return parse_catalog(text)


def parse_catalog(text: str) -> list[CatalogEntry]:
    entries: list[CatalogEntry] = []
    current: dict | None = None
    correction: dict | None = None

    def close_correction():
        nonlocal correction
        if correction is not None:
            current["corrections"].append(CatalogCorrection(
                label=correction["label"], u=correction.get("u"),
                v=correction.get("v"), note=correction.get("note", "")))
            correction = None

    def close_entry():
        nonlocal current
        close_correction()
        if current is not None:
            entries.append(CatalogEntry(
                id=current["id"], kind=current["kind"],
                u=current["u"], v=current["v"],
                corrections=tuple(current["corrections"])))
            current = None

    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("entry "):
            close_entry()
            _, ident, kind = line.split()
            current = {"id": ident, "kind": BranchKind(kind), "corrections": []}
        elif line.startswith("correction "):
            close_correction()
            correction = {"label": line.split(None, 1)[1]}
        elif line.startswith("u:"):
            expr = parse_expr(line[2:].strip(), _CATALOG_CTX)
            (correction if correction is not None else current)["u"] = expr
        elif line.startswith("v:"):
            expr = parse_expr(line[2:].strip(), _CATALOG_CTX)
            (correction if correction is not None else current)["v"] = expr
        elif line.startswith("note:"):
            target = correction if correction is not None else current
            target["note"] = line[5:].strip()
        else:
            raise ValueError(f"unrecognized catalog line: {raw!r}")
    close_entry()
    return entries


def catalog_check(pde: PDESystem, config: NumericConfig | None = None,
                  entries: list[CatalogEntry] | None = None) -> CatalogSummary:
    """Check every printed pair and its correction readings numerically."""
    config = config or NumericConfig()
    entries = entries if entries is not None else load_catalog()
    rows: list[CatalogRow] = []
    for entry in entries:
        printed = _pair_residual(pde, entry.kind, entry.u, entry.v, config)
        row = CatalogRow(id=entry.id, kind=entry.kind.value, status="fail",
                         printed_residual=printed)
        if printed is not None and printed < config.tol:
            row.status = "pass"
        else:
            for corr in entry.corrections:
                residual = _pair_residual(pde, entry.kind,
                                          corr.u or entry.u,
                                          corr.v or entry.v, config)
                if residual is not None and residual < config.tol:
                    row.status = "corrected"
                    row.correction = corr.label
                    row.corrected_residual = residual
                    break
        rows.append(row)
    notes = ["catalog lists only k > 0 and k < 0 closed forms; "
             "no k = 0 entries are printed"]
    return CatalogSummary(rows=rows, notes=notes)


def _pair_residual(pde: PDESystem, kind: BranchKind, u: Expr, v: Expr,
                   config: NumericConfig) -> float | None:
    closed = {pde.function_names[0]: u}
    if len(pde.function_names) > 1:
        closed[pde.function_names[1]] = v
    residuals = pde_residual_exprs(pde, closed)
    bindings = _kind_bindings(kind, config.params)
    try:
        report = _grid_check(residuals, bindings, config)
    except InconclusiveError:
        return None
    return report.numeric_max_residual
