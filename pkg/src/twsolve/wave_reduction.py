"""Traveling-wave reduction of evolution systems to coupled ODEs.

The substitution u(x,t) -> u(xi) with xi = x + lambda*t turns every
d/dt into lambda*d/dxi and every d/dx into d/dxi.  Each reduced
equation is expanded, denominators are cleared, integer content is
divided out and the sign is fixed so that the coefficient of the
canonically first highest-order derivative monomial is positive.  The
rational factor relating the raw substitution result to the normalized
equation is recorded per equation.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction

from . import symexpr as sx
from .pde_parser import PDESystem
from .symexpr import Deriv, Expr, Power, Product, Sum, Symbol

__all__ = ["ODESystem", "ReductionError", "reduce_equation", "reduce_to_ode",
           "normalize_ode", "XI", "MAX_DERIVATIVE_ORDER", "deriv_order"]

log = logging.getLogger("twsolve")

XI = "xi"
MAX_DERIVATIVE_ORDER = 6


class ReductionError(Exception):
    pass


@dataclass(frozen=True)
class ODESystem:
    """Coupled ODE system in xi; equations are expanded and sign/content
    normalized, with ``equations[i] == scales[i] * raw[i]``."""
    unknowns: tuple[str, ...]
    wave_speed: str
    parameters: tuple[str, ...]
    equations: tuple[Expr, ...]
    scales: tuple[Fraction, ...]


def deriv_order(e: Expr) -> int:
    """Highest derivative order appearing anywhere in the expression."""
    if isinstance(e, Deriv):
        return max(len(e.wrt), deriv_order(e.arg))
    if isinstance(e, Sum):
        return max((deriv_order(t) for t in e.terms), default=0)
    if isinstance(e, Product):
        return max((deriv_order(f) for f in e.factors), default=0)
    if isinstance(e, Power):
        return deriv_order(e.base)
    return 0


def reduce_equation(e: Expr, functions: tuple[str, ...],
                    wave_speed_name: str = "lambda") -> Expr:
    """Raw wave substitution of one equation, without any normalization.

    A derivative with a x's and b t's becomes lambda^b times the
    (a+b)-th xi-derivative of its (recursively reduced) argument.  The
    map is linear in the equation.
    """
    funcs = frozenset(functions)
    lam = sx.sym(wave_speed_name)

    def walk(e: Expr) -> Expr:
        if isinstance(e, Deriv):
            inner = walk(e.arg)
            t_count = sum(1 for v in e.wrt if v == "t")
            out = inner
            for _ in e.wrt:
                out = sx.differentiate(out, XI, dependent=funcs)
            return sx.mul(sx.pow_(lam, t_count), out)
        if isinstance(e, Sum):
            return sx.add(*[walk(t) for t in e.terms])
        if isinstance(e, Product):
            return sx.mul(*[walk(f) for f in e.factors])
        if isinstance(e, Power):
            return sx.pow_(walk(e.base), e.exponent)
        return e

    return walk(e)


def reduce_to_ode(pde: PDESystem, wave_speed_name: str = "lambda") -> ODESystem:
    """Apply the wave substitution and normalize the resulting system."""
    taken = set(pde.function_names) | set(pde.parameters) | {XI, "x", "t"}
    if wave_speed_name in taken:
        raise ReductionError(
            f"wave speed name {wave_speed_name!r} collides with a declared name")

    raw = []
    for eq in pde.equations:
        reduced = reduce_equation(eq, pde.function_names, wave_speed_name)
        order = deriv_order(reduced)
        if order > MAX_DERIVATIVE_ORDER:
            raise ReductionError(
                f"derivative order {order} exceeds the cap of {MAX_DERIVATIVE_ORDER}")
        raw.append(reduced)
    return normalize_ode(raw, unknowns=pde.function_names,
                         wave_speed=wave_speed_name, parameters=pde.parameters)


def normalize_ode(raw: list[Expr], *, unknowns: tuple[str, ...],
                  wave_speed: str, parameters: tuple[str, ...]) -> ODESystem:
    """Expand, clear content and fix signs; drops 0 = 0 rows with a warning."""
    equations: list[Expr] = []
    scales: list[Fraction] = []
    for i, eq in enumerate(raw):
        expanded = sx.expand(eq)
        if expanded == sx.ZERO:
            log.warning("equation %d reduced to 0 = 0; dropped", i + 1)
            continue
        prim, scale = sx.integer_normalize(expanded)
        sign = _leading_derivative_sign(prim)
        if sign < 0:
            prim, scale = sx.scale_expr(prim, Fraction(-1)), -scale
        equations.append(prim)
        scales.append(scale)
    return ODESystem(unknowns=unknowns, wave_speed=wave_speed,
                     parameters=parameters, equations=tuple(equations),
                     scales=tuple(scales))


def _leading_derivative_sign(e: Expr) -> int:
    """Sign of the canonically first monomial of maximal derivative order."""
    top = deriv_order(e)
    best = None
    for t in sx.sum_terms(e):
        if deriv_order(t) != top:
            continue
        coeff, mon = sx.split_coeff(t)
        key = mon.key() if mon is not None else ()
        if best is None or key < best[0]:
            best = (key, coeff)
    if best is None:  # no derivatives at all; use the first term
        coeff, _ = sx.split_coeff(sx.sum_terms(e)[0])
        return 1 if coeff >= 0 else -1
    return 1 if best[1] >= 0 else -1
