"""Closed-form traveling-wave families from solved coefficient branches.

Each solution branch is expanded across the closed forms of the
auxiliary equation phi' = phi^2 + k: -1/xi at k = 0, tan/cot forms for
k > 0 and tanh/coth forms for k < 0.  Square roots of k enter through
auxiliary symbols whose squares rewrite to +-k, so the assembled
expressions stay rational in k.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, replace
from enum import Enum

from . import symexpr as sx
from .algsolve import SolutionBranch
from .pde_parser import SQRT_NEG, SQRT_POS, render_expr
from .phi_calculus import Ansatz, PHI, RICCATI_K
from .symexpr import Expr
from .wave_reduction import XI

__all__ = ["BranchKind", "SolutionFamily", "IncompatibleBranchError",
           "phi_branch_expr", "assemble_family", "expand_branches",
           "dedupe", "render_families", "SolveReport", "FamilyRecord"]


class IncompatibleBranchError(Exception):
    """Branch constraints rule out the requested phi closed form."""


class BranchKind(Enum):
    RATIONAL = "rational"   # phi = -1/xi,                    k = 0
    TAN = "tan"             # phi =  sqrt(k) tan(sqrt(k) xi), k > 0
    COT = "cot"             # phi = -sqrt(k) cot(sqrt(k) xi), k > 0
    TANH = "tanh"           # phi = -sqrt(-k) tanh(sqrt(-k) xi), k < 0
    COTH = "coth"           # phi = -sqrt(-k) coth(sqrt(-k) xi), k < 0

    @property
    def k_sign(self) -> int:
        return {"rational": 0, "tan": 1, "cot": 1, "tanh": -1, "coth": -1}[self.value]


ALL_KINDS = (BranchKind.RATIONAL, BranchKind.TAN, BranchKind.COT,
             BranchKind.TANH, BranchKind.COTH)

_SQUARE_RULES = {SQRT_POS: sx.sym(RICCATI_K), SQRT_NEG: sx.neg(sx.sym(RICCATI_K))}


def phi_branch_expr(kind: BranchKind) -> Expr:
    """The closed form of phi(xi) for one sign regime of k."""
    xi = sx.sym(XI)
    if kind is BranchKind.RATIONAL:
        return sx.neg(sx.pow_(xi, -1))
    if kind is BranchKind.TAN:
        s = sx.sym(SQRT_POS)
        return sx.mul(s, sx.func("tan", sx.mul(s, xi)))
    if kind is BranchKind.COT:
        s = sx.sym(SQRT_POS)
        return sx.neg(sx.mul(s, sx.func("cot", sx.mul(s, xi))))
    if kind is BranchKind.TANH:
        s = sx.sym(SQRT_NEG)
        return sx.neg(sx.mul(s, sx.func("tanh", sx.mul(s, xi))))
    if kind is BranchKind.COTH:
        s = sx.sym(SQRT_NEG)
        return sx.neg(sx.mul(s, sx.func("coth", sx.mul(s, xi))))
    raise ValueError(kind)


@dataclass(frozen=True)
class SolutionFamily:
    branch: SolutionBranch
    kind: BranchKind
    u_closed: Expr
    v_closed: Expr | None


def _apply_assignment(e: Expr, assignment: dict[str, Expr]) -> Expr:
    return sx.substitute(e, {sx.sym(n): v for n, v in assignment.items()})


def assemble_family(branch: SolutionBranch, kind: BranchKind, ansatz: Ansatz,
                    wave_speed: str = "lambda") -> SolutionFamily:
    """Build u(x,t) (and v) by substituting the branch into the ansatz.

    For the k = 0 form, k is set to zero everywhere first; a branch whose
    nonvanishing conditions need k != 0 is rejected.
    """
    assignment = branch.assignment_map()
    if kind is BranchKind.RATIONAL:
        kzero = {sx.sym(RICCATI_K): sx.ZERO}
        for c, _rel in branch.constraints:
            if sx.expand(sx.substitute(c, kzero)) == sx.ZERO:
                raise IncompatibleBranchError(
                    f"branch requires {render_expr(c)} != 0, impossible at k = 0")
        try:
            assignment = {n: sx.substitute(v, kzero)
                          for n, v in assignment.items()}
        except sx.MalformedExpressionError as exc:
            raise IncompatibleBranchError(
                f"branch value has a pole at k = 0: {exc}") from exc

    lam = assignment.get(wave_speed, sx.sym(wave_speed))
    xi_value = sx.add(sx.sym("x"), sx.mul(lam, sx.sym("t")))
    phi_value = sx.substitute(phi_branch_expr(kind), {sx.sym(XI): xi_value})

    def build(poly) -> Expr:
        expr = sx.substitute(poly.to_expr(), {sx.sym(PHI): phi_value})
        expr = _apply_assignment(expr, assignment)
        return sx.rewrite_squares(expr, _SQUARE_RULES)

    u_closed = build(ansatz.u_poly())
    v_poly = ansatz.v_poly()
    v_closed = build(v_poly) if v_poly is not None else None
    return SolutionFamily(branch=branch, kind=kind,
                          u_closed=u_closed, v_closed=v_closed)


def expand_branches(branches: list[SolutionBranch], ansatz: Ansatz,
                    wave_speed: str = "lambda",
                    kinds: tuple[BranchKind, ...] = ALL_KINDS) -> list[SolutionFamily]:
    """All compatible (branch, kind) closed forms for nondegenerate branches."""
    out: list[SolutionFamily] = []
    for branch in branches:
        if branch.degenerate:
            continue
        for kind in kinds:
            try:
                out.append(assemble_family(branch, kind, ansatz, wave_speed))
            except IncompatibleBranchError:
                continue
    return dedupe(out)


def dedupe(families: list[SolutionFamily]) -> list[SolutionFamily]:
    """Merge families whose closed forms agree after canonically renaming
    free unknowns; distinct phi branch kinds are always kept apart."""
    seen: set = set()
    out: list[SolutionFamily] = []
    for fam in families:
        renames = {sx.sym(name): sx.sym(f"_free{i}")
                   for i, name in enumerate(sorted(fam.branch.free))}
        u = sx.substitute(fam.u_closed, renames)
        v = sx.substitute(fam.v_closed, renames) if fam.v_closed is not None else None
        key = (fam.kind.value, u.key(), v.key() if v is not None else None)
        if key in seen:
            continue
        seen.add(key)
        out.append(fam)
    return out


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

@dataclass
class FamilyRecord:
    """One family plus its verification outcome, ready for rendering."""
    id: str
    family: SolutionFamily
    verified_symbolic: bool | None = None
    numeric_max_residual: float | None = None
    numeric_params: dict[str, float] | None = None


@dataclass
class SolveReport:
    system: str
    m: int
    n: int | None
    families: list[FamilyRecord]
    complete: bool
    branches_explored: int


def render_families(report: SolveReport, format: str = "text") -> str:
    """Deterministic text / latex / json rendering of a solve report."""
    if format == "json":
        return _render_json(report)
    if format == "latex":
        return _render_latex_report(report)
    if format == "text":
        return _render_text(report)
    raise ValueError(f"unknown format {format!r}")


def _family_dict(rec: FamilyRecord) -> dict:
    fam = rec.family
    branch = fam.branch
    return {
        "id": rec.id,
        "assignment": {n: render_expr(e) for n, e in branch.assignment},
        "constraints": [f"{render_expr(c)} != 0" for c, _ in branch.constraints],
        "free": list(branch.free),
        "branch_kind": fam.kind.value,
        "u": render_expr(fam.u_closed),
        "v": render_expr(fam.v_closed) if fam.v_closed is not None else None,
        "latex_u": render_expr(fam.u_closed, "latex"),
        "latex_v": render_expr(fam.v_closed, "latex")
                   if fam.v_closed is not None else None,
        "verified_symbolic": rec.verified_symbolic,
        "verified_numeric": (
            None if rec.numeric_max_residual is None else
            {"max_residual": rec.numeric_max_residual,
             "params": rec.numeric_params or {}}),
    }


def _render_json(report: SolveReport) -> str:
    doc = {
        "system": report.system,
        "balance": {"m": report.m, "n": report.n},
        "families": [_family_dict(r) for r in report.families],
        "search": {"complete": report.complete,
                   "branches_explored": report.branches_explored},
    }
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def _render_text(report: SolveReport) -> str:
    lines = [f"system: {report.system}",
             f"balance: m = {report.m}" + (f", n = {report.n}"
                                           if report.n is not None else ""),
             f"search: complete={report.complete} "
             f"branches_explored={report.branches_explored}",
             ""]
    if not report.families:
        lines.append("no solution families")
    for rec in report.families:
        fam = rec.family
        lines.append(f"[{rec.id}] kind={fam.kind.value}")
        assign = ", ".join(f"{n} = {render_expr(e)}"
                           for n, e in fam.branch.assignment)
        lines.append(f"  branch: {assign or '(empty)'}")
        if fam.branch.free:
            lines.append(f"  free: {', '.join(fam.branch.free)}")
        if fam.branch.constraints:
            lines.append("  constraints: " + ", ".join(
                f"{render_expr(c)} != 0" for c, _ in fam.branch.constraints))
        lines.append(f"  u = {render_expr(fam.u_closed)}")
        if fam.v_closed is not None:
            lines.append(f"  v = {render_expr(fam.v_closed)}")
        checks = []
        if rec.verified_symbolic is not None:
            checks.append(f"symbolic={'ok' if rec.verified_symbolic else 'FAIL'}")
        if rec.numeric_max_residual is not None:
            checks.append(f"max_residual={rec.numeric_max_residual:.3e}")
        if checks:
            lines.append("  verified: " + " ".join(checks))
        lines.append("")
    return "\n".join(lines)


def _render_latex_report(report: SolveReport) -> str:
    lines = [r"\begin{itemize}"]
    if not report.families:
        lines.append(r"\item no solution families")
    for rec in report.families:
        fam = rec.family
        lines.append(rf"\item[{rec.id}]")
        lines.append(rf"$u = {render_expr(fam.u_closed, 'latex')}$")
        if fam.v_closed is not None:
            lines.append(rf"$v = {render_expr(fam.v_closed, 'latex')}$")
    lines.append(r"\end{itemize}")
    return "\n".join(lines) + "\n"
