"""End-to-end orchestration: parse, reduce, balance, collect, solve,
assemble, verify, report.

Both the command-line tool and the HTTP service drive this module; it
owns the exit-code policy so the two front ends cannot drift apart.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from importlib import resources

from . import symexpr as sx
from .algsolve import SolveOutcome, SolverLimits, solve_system
from .pde_parser import ParseError, PDESystem, parse_system
from .phi_calculus import (AlgebraicSystem, Ansatz, BalanceError, balance,
                           make_ansatz, substitute_and_collect)
from .solutions import (ALL_KINDS, BranchKind, FamilyRecord, SolveReport,
                        SolutionFamily, expand_branches, render_families)
from .verify import (InconclusiveError, NumericConfig, catalog_check,
                     verify_numeric, verify_symbolic)
from .wave_reduction import ODESystem, ReductionError, reduce_to_ode

__all__ = [
    "PipelineConfig", "PipelineResult", "PipelineError",
    "EXIT_OK", "EXIT_PARSE", "EXIT_BALANCE", "EXIT_NO_BRANCH",
    "EXIT_VERIFY", "EXIT_RESOURCE",
    "run_solve", "run_reduce", "run_balance", "run_catalog", "builtin_source",
]

log = logging.getLogger("twsolve")

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_BALANCE = 3
EXIT_NO_BRANCH = 4
EXIT_VERIFY = 5
EXIT_RESOURCE = 6


class PipelineError(Exception):
    """Pipeline failure carrying the CLI exit code."""

    def __init__(self, message: str, exit_code: int):
        super().__init__(message)
        self.exit_code = exit_code


@dataclass
class PipelineConfig:
    source: str
    wave_speed: str = "lambda"
    degrees: tuple[int, int | None] | None = None
    kinds: tuple[BranchKind, ...] = ALL_KINDS
    verify_modes: tuple[str, ...] = ("symbolic", "numeric")
    bindings: dict[str, float] = field(default_factory=dict)
    tol: float = 1e-8
    max_depth: int = 32
    max_branches: int = 512


@dataclass
class PipelineResult:
    pde: PDESystem
    ode: ODESystem
    m: int
    n: int | None
    algsys: AlgebraicSystem
    outcome: SolveOutcome
    families: list[FamilyRecord]
    report: SolveReport
    exit_code: int


def builtin_source() -> str:
    return (resources.files("twsolve.data") / "mkdv.pde").read_text()


def _parse(source: str) -> PDESystem:
    try:
        return parse_system(source)
    except ParseError as exc:
        raise PipelineError(str(exc), EXIT_PARSE) from exc


def run_reduce(source: str, wave_speed: str = "lambda") -> tuple[PDESystem, ODESystem]:
    pde = _parse(source)
    try:
        return pde, reduce_to_ode(pde, wave_speed)
    except ReductionError as exc:
        raise PipelineError(str(exc), EXIT_RESOURCE) from exc


def run_balance(source: str, wave_speed: str = "lambda") -> tuple[int, int | None]:
    _, ode = run_reduce(source, wave_speed)
    try:
        return balance(ode)
    except BalanceError as exc:
        raise PipelineError(str(exc), EXIT_BALANCE) from exc


def run_solve(config: PipelineConfig) -> PipelineResult:
    pde, ode = run_reduce(config.source, config.wave_speed)
    if config.degrees is not None:
        m, n = config.degrees
        if len(pde.functions) == 2 and n is None:
            raise PipelineError("two-function systems need both degrees",
                                EXIT_BALANCE)
        if len(pde.functions) == 1:
            n = None
    else:
        try:
            m, n = balance(ode)
        except BalanceError as exc:
            raise PipelineError(str(exc), EXIT_BALANCE) from exc
    try:
        ansatz = make_ansatz(m, n)
    except ValueError as exc:
        raise PipelineError(str(exc), EXIT_BALANCE) from exc

    try:
        algsys = substitute_and_collect(ode, ansatz)
        outcome = solve_system(algsys, SolverLimits(max_depth=config.max_depth,
                                                    max_branches=config.max_branches))
    except sx.ResourceLimitError as exc:
        raise PipelineError(str(exc), EXIT_RESOURCE) from exc

    nondegenerate = [b for b in outcome.branches if not b.degenerate]
    families = expand_branches(outcome.branches, ansatz, config.wave_speed,
                               config.kinds)

    numeric_config = NumericConfig(params={"eta": 1 / 3, **config.bindings},
                                   tol=config.tol)
    records: list[FamilyRecord] = []
    verified_any = False
    for i, fam in enumerate(families):
        rec = FamilyRecord(id=f"f{i + 1:02d}-{fam.kind.value}", family=fam)
        ok = True
        if "symbolic" in config.verify_modes:
            rec.verified_symbolic = verify_symbolic(fam.branch, algsys)
            ok = ok and rec.verified_symbolic
        if "numeric" in config.verify_modes:
            try:
                report = verify_numeric(fam, pde, numeric_config,
                                        symbolic_ok=rec.verified_symbolic)
            except InconclusiveError:
                log.warning("numeric check inconclusive for %s", rec.id)
                ok = False
            else:
                rec.numeric_max_residual = report.numeric_max_residual
                rec.numeric_params = report.sample_params
                ok = ok and report.numeric_max_residual < config.tol
        verified_any = verified_any or ok
        records.append(rec)

    report = SolveReport(system=pde.name, m=m, n=n, families=records,
                         complete=outcome.complete,
                         branches_explored=outcome.branches_explored)

    if not nondegenerate:
        exit_code = EXIT_RESOURCE if (not outcome.complete
                                      and not outcome.branches) else EXIT_NO_BRANCH
    elif not config.verify_modes:
        exit_code = EXIT_OK if families else EXIT_NO_BRANCH
    elif verified_any:
        exit_code = EXIT_OK
    else:
        exit_code = EXIT_VERIFY
    return PipelineResult(pde=pde, ode=ode, m=m, n=n, algsys=algsys,
                          outcome=outcome, families=records, report=report,
                          exit_code=exit_code)


def run_catalog(source: str | None = None, bindings: dict[str, float] | None = None,
                tol: float = 1e-8):
    """Catalog regression; the input must be the built-in coupled system."""
    builtin = _parse(builtin_source())
    pde = _parse(source) if source is not None else builtin
    if pde.equations != builtin.equations or pde.functions != builtin.functions:
        raise PipelineError(
            "the catalog is defined for the built-in coupled MkdV system only",
            EXIT_PARSE)
    config = NumericConfig(params={"eta": 1 / 3, **(bindings or {})}, tol=tol)
    return catalog_check(pde, config)
