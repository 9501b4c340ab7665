"""Command-line front end.

Thin client over the pipeline: argument parsing, report writing and exit
codes only.  Exit codes: 0 at least one verified family; 2 parse error;
3 balance failure; 4 no nondegenerate branch; 5 verification failure;
6 resource limits exhausted without a result.
"""
from __future__ import annotations

import json
import logging
import os
import sys

import click

from .pde_parser import render_expr
from .pipeline import (EXIT_PARSE, PipelineConfig, PipelineError, run_balance,
                       run_catalog, run_reduce, run_solve)
from .solutions import ALL_KINDS, BranchKind, render_families

log = logging.getLogger("twsolve")

_LOG_LEVELS = {"quiet": logging.ERROR, "info": logging.INFO,
               "debug": logging.DEBUG}


def _setup_logging() -> None:
    level = os.environ.get("TWSOLVE_LOG", "quiet").lower()
    if level not in _LOG_LEVELS:
        level = "quiet"
    logging.basicConfig(level=_LOG_LEVELS[level],
                        format="%(levelname)s %(message)s", stream=sys.stderr)


def _read_source(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise PipelineError(f"cannot read {path}: {exc}", EXIT_PARSE) from exc


def _parse_bindings(text: str | None) -> dict[str, float]:
    out: dict[str, float] = {}
    if not text:
        return out
    for piece in text.split(","):
        if not piece.strip():
            continue
        name, _, value = piece.partition("=")
        if not _ or not name.strip():
            raise click.BadParameter(f"bindings look like name=value, got {piece!r}")
        try:
            out[name.strip()] = _parse_number(value.strip())
        except ValueError as exc:
            raise click.BadParameter(str(exc))
    return out


def _parse_number(text: str) -> float:
    if "/" in text:
        num, _, den = text.partition("/")
        return float(num) / float(den)
    return float(text)


def _parse_degrees(text: str | None) -> tuple[int, int | None] | None:
    if text is None:
        return None
    parts = [p.strip() for p in text.split(",")]
    try:
        if len(parts) == 1:
            return (int(parts[0]), None)
        if len(parts) == 2:
            return (int(parts[0]), int(parts[1]))
    except ValueError:
        pass
    raise click.BadParameter("expected M or M,N with positive integers")


def _parse_kinds(text: str | None) -> tuple[BranchKind, ...]:
    if text is None:
        return ALL_KINDS
    out = []
    for piece in text.split(","):
        piece = piece.strip()
        if not piece:
            continue
        try:
            out.append(BranchKind(piece))
        except ValueError:
            names = ", ".join(k.value for k in ALL_KINDS)
            raise click.BadParameter(f"unknown kind {piece!r}; choose from {names}")
    return tuple(out) or ALL_KINDS


def _emit(text: str, output: str | None) -> None:
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


def _fail(exc: PipelineError) -> None:
    click.echo(f"error: {exc}", err=True)
    sys.exit(exc.exit_code)


@click.group()
@click.version_option(package_name="twsolve", prog_name="twsolve")
def main() -> None:
    """Traveling-wave solution finder for coupled evolution systems."""
    _setup_logging()


@main.command()
@click.argument("input_path", metavar="INPUT")
@click.option("--wave-speed", default="lambda", show_default=True,
              help="Name of the wave-speed symbol.")
@click.option("--degrees", default=None, metavar="M,N",
              help="Skip balancing and use these ansatz degrees.")
@click.option("--kinds", default=None, metavar="LIST",
              help="Comma list of closed-form kinds "
                   "(tanh,coth,tan,cot,rational).")
@click.option("--verify", "verify_modes", default="symbolic,numeric",
              show_default=True, metavar="LIST",
              help="Comma list of checks to run (symbolic,numeric).")
@click.option("--bind", default=None, metavar="LIST",
              help="Numeric bindings like k=-1,eta=1/3,a0=2/5.")
@click.option("--tol", default=1e-8, show_default=True,
              help="Numeric verification tolerance.")
@click.option("--max-depth", default=32, show_default=True)
@click.option("--max-branches", default=512, show_default=True)
@click.option("--format", "fmt", default="text", show_default=True,
              type=click.Choice(["text", "latex", "json"]))
@click.option("--output", default=None, type=click.Path(dir_okay=False),
              help="Write the report here instead of stdout.")
@click.option("--seed", default=0, show_default=True,
              help="Random seed; the pipeline itself is deterministic.")
def solve(input_path, wave_speed, degrees, kinds, verify_modes, bind, tol,
          max_depth, max_branches, fmt, output, seed) -> None:
    """Run the full pipeline on INPUT and report solution families."""
    del seed  # accepted for interface stability; no randomness in the core
    modes = tuple(m.strip() for m in verify_modes.split(",") if m.strip())
    for mode in modes:
        if mode not in ("symbolic", "numeric"):
            raise click.BadParameter(f"unknown verify mode {mode!r}")
    try:
        config = PipelineConfig(
            source=_read_source(input_path),
            wave_speed=wave_speed,
            degrees=_parse_degrees(degrees),
            kinds=_parse_kinds(kinds),
            verify_modes=modes,
            bindings=_parse_bindings(bind),
            tol=tol,
            max_depth=max_depth,
            max_branches=max_branches,
        )
        result = run_solve(config)
    except PipelineError as exc:
        _fail(exc)
    _emit(render_families(result.report, fmt), output)
    sys.exit(result.exit_code)


@main.command()
@click.argument("input_path", metavar="INPUT")
@click.option("--wave-speed", default="lambda", show_default=True)
@click.option("--format", "fmt", default="text", show_default=True,
              type=click.Choice(["text", "latex", "json"]))
@click.option("--output", default=None, type=click.Path(dir_okay=False))
def reduce(input_path, wave_speed, fmt, output) -> None:
    """Stop after the traveling-wave reduction and print the ODE system."""
    try:
        _, ode = run_reduce(_read_source(input_path), wave_speed)
    except PipelineError as exc:
        _fail(exc)
    if fmt == "json":
        doc = {"wave_speed": ode.wave_speed,
               "unknowns": list(ode.unknowns),
               "equations": [render_expr(e) for e in ode.equations],
               "scales": [str(s) for s in ode.scales]}
        _emit(json.dumps(doc, indent=2) + "\n", output)
    elif fmt == "latex":
        lines = [f"{render_expr(e, 'latex')} = 0" for e in ode.equations]
        _emit("\n".join(lines) + "\n", output)
    else:
        lines = []
        for e, s in zip(ode.equations, ode.scales):
            lines.append(f"0 = {render_expr(e)}   [scale {s}]")
        _emit("\n".join(lines) + "\n", output)
    sys.exit(0)


@main.command()
@click.argument("input_path", metavar="INPUT")
@click.option("--wave-speed", default="lambda", show_default=True)
def balance(input_path, wave_speed) -> None:
    """Print the balanced ansatz degrees for INPUT."""
    try:
        m, n = run_balance(_read_source(input_path), wave_speed)
    except PipelineError as exc:
        _fail(exc)
    click.echo(f"m = {m}" + (f", n = {n}" if n is not None else ""))
    sys.exit(0)


@main.command()
@click.argument("input_path", metavar="INPUT", required=False)
@click.option("--bind", default=None, metavar="LIST",
              help="Numeric bindings like eta=1/3,a0=2/5.")
@click.option("--tol", default=1e-8, show_default=True)
@click.option("--format", "fmt", default="text", show_default=True,
              type=click.Choice(["text", "json"]))
@click.option("--output", default=None, type=click.Path(dir_okay=False))
def catalog(input_path, bind, tol, fmt, output) -> None:
    """Check the printed solution pairs of the built-in coupled system."""
    try:
        source = _read_source(input_path) if input_path else None
        summary = run_catalog(source, _parse_bindings(bind), tol)
    except PipelineError as exc:
        _fail(exc)
    if fmt == "json":
        doc = {
            "rows": [{"id": r.id, "kind": r.kind, "status": r.status,
                      "printed_residual": r.printed_residual,
                      "correction": r.correction,
                      "corrected_residual": r.corrected_residual}
                     for r in summary.rows],
            "passed_as_printed": summary.passed_as_printed,
            "all_accounted": summary.all_accounted,
            "notes": summary.notes,
        }
        _emit(json.dumps(doc, indent=2) + "\n", output)
    else:
        lines = [f"{'id':>3}  {'kind':<8} {'status':<10} "
                 f"{'printed residual':<18} correction"]
        for r in summary.rows:
            printed = ("inconclusive" if r.printed_residual is None
                       else f"{r.printed_residual:.3e}")
            corr = ""
            if r.correction:
                corr = f"{r.correction} ({r.corrected_residual:.3e})"
            lines.append(f"{r.id:>3}  {r.kind:<8} {r.status:<10} "
                         f"{printed:<18} {corr}")
        lines.append(f"passed as printed: {summary.passed_as_printed}/16")
        lines.append(f"all entries accounted for: {summary.all_accounted}")
        for note in summary.notes:
            lines.append(f"note: {note}")
        _emit("\n".join(lines) + "\n", output)
    sys.exit(0)


if __name__ == "__main__":
    main()
