"""Exact solver for parametric polynomial systems by case-splitting elimination.

Parameters are treated as transcendentals: equations are only split on
expressions that contain at least one unknown, so every returned branch
holds for generic parameter values.  Elimination prefers unknowns that
occur linearly; when none does, equations are factored (monomial
content, rational roots of univariate equations, quadratics with
perfect-square discriminant) and each factor spawns a branch.  Every
leaf is re-verified against the original system before it is reported,
so soundness is unconditional; completeness is best effort within the
configured limits.

Branches are explored depth-first in a fixed order and the final list
is sorted canonically, so any exploration schedule (sibling branches
are independent and could run concurrently) returns the identical
result.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction

from . import symexpr as sx
from .phi_calculus import AlgebraicSystem, AlgEquation
from .symexpr import Expr, Power, Product, Rational, Sum, Symbol

__all__ = ["SolutionBranch", "SolverLimits", "SolveOutcome", "ScopeError",
           "solve_system", "check_assignment", "simplify_fraction"]

log = logging.getLogger("twsolve")

NONZERO = "!=0"
ISZERO = "=0"

MAX_UNKNOWNS = 8
MAX_TOTAL_DEGREE = 4


class ScopeError(Exception):
    """System is outside the supported unknown-count / degree envelope."""


@dataclass(frozen=True)
class SolutionBranch:
    """One triangularized solution with nonvanishing side conditions."""
    assignment: tuple[tuple[str, Expr], ...]
    constraints: tuple[tuple[Expr, str], ...]
    free: tuple[str, ...]
    degenerate: bool

    def assignment_map(self) -> dict[str, Expr]:
        return dict(self.assignment)

    def sort_key(self):
        return (len(self.assignment),
                tuple((n, e.key()) for n, e in self.assignment),
                tuple((e.key(), r) for e, r in self.constraints))


@dataclass(frozen=True)
class SolverLimits:
    max_depth: int = 32
    max_branches: int = 512


@dataclass
class SolveOutcome:
    branches: list[SolutionBranch]
    complete: bool
    branches_explored: int
    discarded_unsound: int = 0


# ---------------------------------------------------------------------------
# Multivariate polynomial helpers (dense-dict form over a symbol tuple)
# ---------------------------------------------------------------------------

def to_multipoly(e: Expr, symbols: tuple[str, ...]) -> dict[tuple[int, ...], Fraction]:
    """Exponent-vector -> coefficient map of an expanded polynomial."""
    index = {s: i for i, s in enumerate(symbols)}
    out: dict[tuple[int, ...], Fraction] = {}
    for t in sx.sum_terms(sx.normalize(e)):
        coeff, mon = sx.split_coeff(t)
        exps = [0] * len(symbols)
        if mon is not None:
            for f in sx.product_factors(mon):
                base, n = f, 1
                if isinstance(f, Power):
                    base, n = f.base, f.exponent
                if not isinstance(base, Symbol) or base.name not in index or n < 0:
                    raise sx.NotPolynomialError(f"non-polynomial factor {f!r}")
                exps[index[base.name]] += n
        key = tuple(exps)
        out[key] = out.get(key, Fraction(0)) + coeff
    return {k: v for k, v in out.items() if v != 0}


def from_multipoly(poly: dict[tuple[int, ...], Fraction],
                   symbols: tuple[str, ...]) -> Expr:
    terms = []
    for exps, c in poly.items():
        factors = [sx.pow_(sx.sym(s), n) for s, n in zip(symbols, exps) if n]
        terms.append(sx.mul(sx.rat(c), *factors))
    return sx.add(*terms)


def _frac_sqrt(c: Fraction) -> Fraction | None:
    if c < 0:
        return None
    pn, pd = math.isqrt(c.numerator), math.isqrt(c.denominator)
    if pn * pn == c.numerator and pd * pd == c.denominator:
        return Fraction(pn, pd)
    return None


def poly_sqrt(e: Expr) -> Expr | None:
    """Exact square root of a multivariate polynomial, or None."""
    e = sx.expand(e)
    symbols = tuple(sorted(sx.free_symbols(e)))
    try:
        target = to_multipoly(e, symbols)
    except sx.NotPolynomialError:
        return None
    if not target:
        return sx.ZERO

    def mp_mul(a, b):
        out: dict[tuple[int, ...], Fraction] = {}
        for ka, va in a.items():
            for kb, vb in b.items():
                k = tuple(x + y for x, y in zip(ka, kb))
                out[k] = out.get(k, Fraction(0)) + va * vb
        return {k: v for k, v in out.items() if v != 0}

    def mp_sub(a, b):
        out = dict(a)
        for k, v in b.items():
            out[k] = out.get(k, Fraction(0)) - v
        return {k: v for k, v in out.items() if v != 0}

    lead_key = max(target)
    lead = target[lead_key]
    if any(x % 2 for x in lead_key):
        return None
    lead_root = _frac_sqrt(lead)
    if lead_root is None:
        return None
    root_lead_key = tuple(x // 2 for x in lead_key)
    root = {root_lead_key: lead_root}
    for _ in range(len(target) + 8):
        rem = mp_sub(target, mp_mul(root, root))
        if not rem:
            return from_multipoly(root, symbols)
        k = max(rem)
        exps = tuple(x - y for x, y in zip(k, root_lead_key))
        if any(x < 0 for x in exps):
            return None
        root[exps] = root.get(exps, Fraction(0)) + rem[k] / (2 * lead_root)
        if root[exps] == 0:
            return None
    return None


# ---------------------------------------------------------------------------
# Solver state
# ---------------------------------------------------------------------------

def _add_constraint(constraints: list[Expr], expr: Expr) -> list[Expr]:
    """Record expr != 0, decomposing monomials into base factors."""
    out = list(constraints)
    if isinstance(expr, Rational):
        return out
    prim, _ = sx.integer_normalize(expr)
    pieces = []
    if not isinstance(prim, Sum):
        for f in sx.product_factors(prim):
            base, _ = f, 1
            if isinstance(f, Power):
                base = f.base
            if not isinstance(base, Rational):
                pieces.append(base)
    else:
        pieces.append(prim)
    for p in pieces:
        if p not in out:
            out.append(p)
    return out


@dataclass
class _State:
    equations: list[Expr]
    assignment: list[tuple[str, Expr]]
    constraints: list[Expr]  # nonzero side conditions, primitive form
    depth: int


class _Search:
    def __init__(self, sys: AlgebraicSystem, limits: SolverLimits):
        self.sys = sys
        self.unknowns = tuple(sys.unknowns)
        self.limits = limits
        self.leaves: list[SolutionBranch] = []
        self.paths = 0          # root-to-leaf paths opened by case splits
        self.complete = True
        self.discarded_unsound = 0

    def _budget(self, extra: int) -> bool:
        """Reserve budget for ``extra`` additional paths from a split."""
        if self.paths + extra > self.limits.max_branches:
            log.debug("solver: branch budget exhausted")
            self.complete = False
            return False
        self.paths += extra
        return True

    # -- cleaning ---------------------------------------------------------

    def _clean(self, equations: list[Expr]) -> list[Expr] | None:
        """Normalize the working set; None means the branch is inconsistent."""
        seen: set[Expr] = set()
        out: list[Expr] = []
        for eq in equations:
            if not sx.is_expanded(eq):
                eq = sx.expand(eq)
            if eq == sx.ZERO:
                continue
            eq = self._drop_parameter_monomial(eq)
            eq, _ = sx.integer_normalize(eq)
            names = sx.free_symbols(eq) & set(self.unknowns)
            if not names:
                # nonzero polynomial in transcendental parameters only
                return None
            if eq not in seen:
                seen.add(eq)
                out.append(eq)
        out.sort(key=lambda e: (len(sx.sum_terms(e)), e.key()))
        return out

    def _drop_parameter_monomial(self, eq: Expr) -> Expr:
        """Divide out parameter-only monomial content (parameters are nonzero)."""
        params = set(self.sys.parameters)
        common: dict[str, int] | None = None
        for t in sx.sum_terms(eq):
            powers: dict[str, int] = {}
            _, mon = sx.split_coeff(t)
            for f in sx.product_factors(mon) if mon is not None else ():
                base, n = f, 1
                if isinstance(f, Power):
                    base, n = f.base, f.exponent
                if isinstance(base, Symbol) and base.name in params and n > 0:
                    powers[base.name] = powers.get(base.name, 0) + n
            if common is None:
                common = powers
            else:
                common = {s: min(c, powers.get(s, 0))
                          for s, c in common.items() if powers.get(s, 0) > 0}
            if not common:
                return eq
        if not common:
            return eq
        divisor = sx.mul(*[sx.pow_(sx.sym(s), -n) for s, n in common.items()])
        return sx.expand(sx.mul(eq, divisor))

    # -- recursion --------------------------------------------------------

    def run(self, state: _State) -> None:
        if state.depth > self.limits.max_depth:
            log.debug("solver: depth limit %d hit", self.limits.max_depth)
            self.complete = False
            return
        cleaned = self._clean(state.equations)
        if cleaned is None:
            return
        if not cleaned:
            self._leaf(state)
            return

        pivot = self._find_linear_pivot(cleaned)
        if pivot is not None:
            y, eq_idx = pivot
            self._split_linear(state, cleaned, y, eq_idx)
            return

        if self._split_factor(state, cleaned):
            return
        if self._try_pair_reduction(state, cleaned):
            return
        # no rule applies: give up on this branch, search is incomplete
        log.debug("solver stuck at depth %d on %r", state.depth, cleaned)
        self.complete = False

    def _unknown_degrees(self, eq: Expr) -> dict[str, int]:
        """Max degree of each unknown across the monomials of a flat sum."""
        unknowns = set(self.unknowns)
        out: dict[str, int] = {}
        for t in sx.sum_terms(eq):
            per_term: dict[str, int] = {}
            for f in sx.product_factors(t):
                base, n = f, 1
                if isinstance(f, Power):
                    base, n = f.base, f.exponent
                if isinstance(base, Symbol) and base.name in unknowns:
                    per_term[base.name] = per_term.get(base.name, 0) + n
            for name, d in per_term.items():
                out[name] = max(out.get(name, 0), d)
        return out

    def _find_linear_pivot(self, equations: list[Expr]) -> tuple[str, int] | None:
        occurrences: dict[str, int] = {}
        linear_in: dict[str, list[int]] = {}
        for i, eq in enumerate(equations):
            for name, degree in self._unknown_degrees(eq).items():
                occurrences[name] = occurrences.get(name, 0) + 1
                if degree == 1:
                    linear_in.setdefault(name, []).append(i)
        if not linear_in:
            return None
        name = min(linear_in, key=lambda s: (occurrences[s], s))
        candidates = linear_in[name]
        eq_idx = min(candidates, key=lambda i: (len(sx.sum_terms(equations[i])),
                                                equations[i].key()))
        return name, eq_idx

    def _split_linear(self, state: _State, equations: list[Expr],
                      y: str, eq_idx: int) -> None:
        eq = equations[eq_idx]
        poly = sx.as_polynomial(eq, y)
        A = poly[1]
        B = poly.get(0, sx.ZERO)
        others = [e for i, e in enumerate(equations) if i != eq_idx]
        a_has_unknowns = bool(sx.free_symbols(A) & set(self.unknowns))

        split = a_has_unknowns and self._budget(1)

        # branch: A != 0, y := -B/A
        rhs = sx.div(sx.neg(B), A)
        substituted = [self._substitute_linear(e, y, A, B) for e in others]
        constraints = _add_constraint(state.constraints, A)
        self.run(_State(equations=substituted,
                        assignment=state.assignment + [(y, rhs)],
                        constraints=constraints,
                        depth=state.depth + 1))

        if split:
            # branch: A = 0 (and then B must vanish too)
            self.run(_State(equations=others + [A, B],
                            assignment=list(state.assignment),
                            constraints=list(state.constraints),
                            depth=state.depth + 1))

    def _substitute_linear(self, eq: Expr, y: str, A: Expr, B: Expr) -> Expr:
        """Replace y by -B/A in a polynomial, clearing A denominators."""
        poly = sx.as_polynomial(eq, y)
        if not poly:
            return sx.ZERO
        top = max(poly)
        if top == 0:
            return eq
        parts = []
        for d, c in poly.items():
            parts.append(sx.mul(c, sx.pow_(sx.neg(B), d) if d else sx.ONE,
                                sx.pow_(A, top - d) if top - d else sx.ONE))
        return sx.expand(sx.add(*parts))

    # -- factor splits ------------------------------------------------

    def _split_factor(self, state: _State, equations: list[Expr]) -> bool:
        for idx, eq in enumerate(equations):
            others = [e for i, e in enumerate(equations) if i != idx]
            if self._try_monomial_split(state, eq, others):
                return True
            if self._try_univariate_roots(state, eq, others):
                return True
            if self._try_quadratic_split(state, eq, others):
                return True
        return False

    def _try_monomial_split(self, state: _State, eq: Expr,
                            others: list[Expr]) -> bool:
        unknowns = set(self.unknowns)
        common: dict[str, int] | None = None
        for t in sx.sum_terms(eq):
            powers: dict[str, int] = {}
            _, mon = sx.split_coeff(t)
            for f in sx.product_factors(mon) if mon is not None else ():
                base, n = f, 1
                if isinstance(f, Power):
                    base, n = f.base, f.exponent
                if isinstance(base, Symbol) and base.name in unknowns and n > 0:
                    powers[base.name] = powers.get(base.name, 0) + n
            if common is None:
                common = powers
            else:
                common = {s: min(c, powers.get(s, 0))
                          for s, c in common.items() if powers.get(s, 0) > 0}
            if not common:
                return False
        if not common:
            return False
        names = sorted(common)
        divisor = sx.mul(*[sx.pow_(sx.sym(s), -n) for s, n in common.items()])
        cofactor = sx.expand(sx.mul(eq, divisor))
        with_cofactor = cofactor != sx.ONE
        if not self._budget(len(names) - 1 + (1 if with_cofactor else 0)):
            return True
        for name in names:
            self.run(_State(equations=others + [sx.sym(name)],
                            assignment=list(state.assignment),
                            constraints=list(state.constraints),
                            depth=state.depth + 1))
        if with_cofactor:
            constraints = list(state.constraints)
            for name in names:
                constraints = _add_constraint(constraints, sx.sym(name))
            self.run(_State(equations=others + [cofactor],
                            assignment=list(state.assignment),
                            constraints=constraints,
                            depth=state.depth + 1))
        return True

    def _try_univariate_roots(self, state: _State, eq: Expr,
                              others: list[Expr]) -> bool:
        """Split a single-unknown equation with rational coefficients on its
        rational roots; a rootless even cofactor without real roots closes
        the branch exactly."""
        names = sorted(sx.free_symbols(eq) & set(self.unknowns))
        if len(names) != 1:
            return False
        y = names[0]
        if sx.free_symbols(eq) - {y} - set(self.sys.parameters):
            return False
        try:
            poly = sx.as_polynomial(eq, y)
        except sx.NotPolynomialError:
            return False
        if any(not isinstance(c, Rational) for c in poly.values()):
            return False
        degree = max(poly)
        if degree < 2:
            return False
        coeffs = {d: c.value for d, c in poly.items()}
        roots = _rational_roots(coeffs, degree)
        remaining = _deflate(coeffs, degree, roots)
        if roots and not self._budget(len(roots) - 1):
            return True
        for r in roots:
            self.run(_State(equations=others + [sx.sub(sx.sym(y), sx.rat(r))],
                            assignment=list(state.assignment),
                            constraints=list(state.constraints),
                            depth=state.depth + 1))
        rem_degree = max(remaining) if remaining else 0
        if rem_degree >= 1:
            if rem_degree == 2:
                c2 = remaining.get(2, Fraction(0))
                c1 = remaining.get(1, Fraction(0))
                c0 = remaining.get(0, Fraction(0))
                if c1 * c1 - 4 * c2 * c0 < 0:
                    return True  # no real roots: branch closed exactly
            # real but irrational roots are outside the rational branch class
            log.debug("solver: irrational roots of %s in %s left unexplored",
                      remaining, y)
            self.complete = False
        return True

    def _try_quadratic_split(self, state: _State, eq: Expr,
                             others: list[Expr]) -> bool:
        for y in self.unknowns:
            if not sx.contains_symbol(eq, y):
                continue
            try:
                poly = sx.as_polynomial(eq, y)
            except sx.NotPolynomialError:
                continue
            if max(poly) != 2:
                continue
            c2 = poly[2]
            c1 = poly.get(1, sx.ZERO)
            c0 = poly.get(0, sx.ZERO)
            disc = sx.expand(sx.sub(sx.mul(c1, c1), sx.mul(sx.rat(4), c2, c0)))
            root = poly_sqrt(disc)
            if root is None:
                continue
            yv = sx.sym(y)
            f1 = sx.expand(sx.add(sx.mul(sx.rat(2), c2, yv), c1, sx.neg(root)))
            f2 = sx.expand(sx.add(sx.mul(sx.rat(2), c2, yv), c1, root))
            c2_has_unknowns = bool(sx.free_symbols(c2) & set(self.unknowns))
            if not self._budget(1 + (1 if c2_has_unknowns else 0)):
                return True
            constraints = _add_constraint(state.constraints, c2)
            for f in (f1, f2):
                self.run(_State(equations=others + [f],
                                assignment=list(state.assignment),
                                constraints=constraints,
                                depth=state.depth + 1))
            if c2_has_unknowns:
                self.run(_State(equations=others + [eq, c2],
                                assignment=list(state.assignment),
                                constraints=list(state.constraints),
                                depth=state.depth + 1))
            return True
        return False

    def _try_pair_reduction(self, state: _State, equations: list[Expr]) -> bool:
        """Cross-eliminate the top power of an unknown between two equations.

        The reduction lc(q)*p - lc(p)*y^(dp-dq)*q lies in the ideal, so
        adding it never loses solutions; it often exposes parameter-only
        contradictions that the factor rules cannot see.
        """
        present = set(equations)
        for i, p in enumerate(equations):
            for j, q in enumerate(equations):
                if i == j:
                    continue
                for y in self.unknowns:
                    try:
                        pp = sx.as_polynomial(p, y)
                        qq = sx.as_polynomial(q, y)
                    except sx.NotPolynomialError:
                        continue
                    dp = max(pp, default=0)
                    dq = max(qq, default=0)
                    if dq < 1 or dp < dq:
                        continue
                    shift = sx.pow_(sx.sym(y), dp - dq) if dp > dq else sx.ONE
                    r = sx.expand(sx.sub(sx.mul(qq[dq], p),
                                         sx.mul(pp[dp], shift, q)))
                    if r == sx.ZERO:
                        continue
                    r, _ = sx.integer_normalize(r)
                    if r in present:
                        continue
                    self.run(_State(equations=equations + [r],
                                    assignment=list(state.assignment),
                                    constraints=list(state.constraints),
                                    depth=state.depth + 1))
                    return True
        return False

    # -- leaves ---------------------------------------------------------

    def _leaf(self, state: _State) -> None:
        try:
            final: dict[str, Expr] = {}
            for name, rhs in reversed(state.assignment):
                final[name] = simplify_fraction(
                    sx.substitute(rhs, {sx.sym(n): v for n, v in final.items()}))
            final = self._reparameterize(final)
        except sx.MalformedExpressionError:
            return  # a denominator vanished under later assignments
        bindings = {sx.sym(n): v for n, v in final.items()}
        constraints: list[Expr] = []
        for c in state.constraints:
            val = sx.substitute(c, bindings)
            num, _ = sx.as_fraction(val)
            num = sx.expand(num)
            if num == sx.ZERO:
                return  # inconsistent with a nonvanishing condition
            if isinstance(num, Rational):
                continue
            constraints = _add_constraint(constraints, num)
        free = tuple(u for u in self.unknowns if u not in final)
        lead = self.sys.leading[0] if self.sys.leading else None
        degenerate = bool(lead and final.get(lead) == sx.ZERO)
        branch = SolutionBranch(
            assignment=tuple(sorted(final.items())),
            constraints=tuple(sorted(((c, NONZERO) for c in constraints),
                                     key=lambda p: p[0].key())),
            free=free,
            degenerate=degenerate,
        )
        if not check_assignment(self.sys, branch):
            self.discarded_unsound += 1
            log.warning("discarding unsound solver leaf %s", branch.assignment)
            return
        self.leaves.append(branch)

    def _reparameterize(self, final: dict[str, Expr]) -> dict[str, Expr]:
        """Prefer freeing the lexicographically smallest unknowns.

        Swaps an assigned unknown y for a free one f when y < f and y's
        value is linear in f with a constant coefficient; the swap is an
        exact change of coordinates on the branch.
        """
        while True:
            free = {u for u in self.unknowns if u not in final}
            swap = None
            for y in sorted(final):
                rhs = final[y]
                for f in sorted(sx.free_symbols(rhs) & free):
                    if y >= f:
                        continue
                    try:
                        poly = sx.as_polynomial(rhs, f)
                    except sx.NotPolynomialError:
                        continue
                    if max(poly, default=0) != 1 or not isinstance(poly[1], Rational):
                        continue
                    swap = (y, f, poly[1], poly.get(0, sx.ZERO))
                    break
                if swap:
                    break
            if not swap:
                return final
            y, f, a, b = swap
            new_rhs = simplify_fraction(sx.div(sx.sub(sx.sym(y), b), a))
            del final[y]
            subs = {sx.sym(f): new_rhs}
            final = {n: simplify_fraction(sx.substitute(r, subs))
                     for n, r in final.items()}
            final[f] = new_rhs


def _rational_roots(coeffs: dict[int, Fraction], degree: int) -> list[Fraction]:
    """All rational roots (with multiplicity collapsed) by the root theorem."""
    lcm = 1
    for c in coeffs.values():
        lcm = lcm * c.denominator // math.gcd(lcm, c.denominator)
    ints = {d: int(c * lcm) for d, c in coeffs.items()}
    a0 = ints.get(0, 0)
    an = ints[degree]
    if a0 == 0:
        roots = [Fraction(0)]
        shifted = {d - min(d for d in ints if ints[d]): c
                   for d, c in ints.items() if c}
        sub = _rational_roots({d: Fraction(c) for d, c in shifted.items()},
                              max(shifted))
        return sorted(set(roots + sub))
    cands = {Fraction(s * p, q)
             for p in _divisors(abs(a0)) for q in _divisors(abs(an))
             for s in (1, -1)}
    out = []
    for r in sorted(cands):
        val = sum(c * r ** d for d, c in ints.items())
        if val == 0:
            out.append(r)
    return out


def _divisors(n: int) -> list[int]:
    out = []
    i = 1
    while i * i <= n:
        if n % i == 0:
            out.extend((i, n // i))
        i += 1
    return sorted(set(out))


def _deflate(coeffs: dict[int, Fraction], degree: int,
             roots: list[Fraction]) -> dict[int, Fraction]:
    """Divide out (y - r) for each rational root, with multiplicity."""
    dense = [coeffs.get(d, Fraction(0)) for d in range(degree + 1)]
    for r in roots:
        while len(dense) > 1:
            quot = [Fraction(0)] * (len(dense) - 1)
            acc = Fraction(0)
            for d in range(len(dense) - 1, 0, -1):
                acc = dense[d] + acc * r if d < len(dense) - 1 else dense[d]
                quot[d - 1] = acc
            rem = dense[0] + acc * r
            if rem != 0:
                break
            dense = quot
    return {d: c for d, c in enumerate(dense) if c != 0}


def exact_divide(num: Expr, den: Expr) -> Expr | None:
    """Exact multivariate polynomial quotient num/den, or None."""
    symbols = tuple(sorted(sx.free_symbols(num) | sx.free_symbols(den)))
    try:
        n = to_multipoly(sx.expand(num), symbols)
        d = to_multipoly(sx.expand(den), symbols)
    except sx.NotPolynomialError:
        return None
    if not d:
        return None
    lead = max(d)
    lead_c = d[lead]
    quot: dict[tuple[int, ...], Fraction] = {}
    for _ in range(len(n) * 4 + 4):
        if not n:
            return from_multipoly(quot, symbols)
        k = max(n)
        exps = tuple(a - b for a, b in zip(k, lead))
        if any(x < 0 for x in exps):
            return None
        c = n[k] / lead_c
        quot[exps] = quot.get(exps, Fraction(0)) + c
        for dk, dv in d.items():
            nk = tuple(a + b for a, b in zip(exps, dk))
            nv = n.get(nk, Fraction(0)) - c * dv
            if nv == 0:
                n.pop(nk, None)
            else:
                n[nk] = nv
    return None


def simplify_fraction(e: Expr) -> Expr:
    """Normalize a rational function: cancel exact polynomial quotients,
    keep primitive numerator/denominator otherwise."""
    num, den = sx.as_fraction(e)
    num = sx.expand(num)
    den = sx.expand(den)
    if num == sx.ZERO:
        return sx.ZERO
    if isinstance(den, Rational):
        return sx.scale_expr(num, Fraction(1) / den.value)
    quotient = exact_divide(num, den)
    if quotient is not None:
        return quotient
    n_prim, sn = sx.integer_normalize(num)
    d_prim, sd = sx.integer_normalize(den)
    scaled = sx.scale_expr(n_prim, Fraction(sd) / sn)
    return sx.mul(scaled, sx.pow_(d_prim, -1))


def _reduce_with_rules(e: Expr, rules: list[Expr], unknowns: set[str]) -> Expr:
    """Best-effort reduction of e modulo polynomial rules that are linear in
    some symbol.  Used only when a branch carries explicit =0 constraints."""
    current = e
    for _ in range(8):
        changed = False
        for rule in rules:
            for name in sorted(sx.free_symbols(rule)):
                try:
                    poly = sx.as_polynomial(rule, name)
                except sx.NotPolynomialError:
                    continue
                if max(poly) != 1 or sx.free_symbols(poly[1]) & unknowns:
                    continue
                if not isinstance(poly[1], Rational):
                    continue
                rhs = sx.div(sx.neg(poly.get(0, sx.ZERO)), poly[1])
                new = sx.expand(sx.substitute(current, {sx.sym(name): rhs}))
                if new != current:
                    current = new
                    changed = True
                break
        if not changed or current == sx.ZERO:
            break
    return current


def check_assignment(sys: AlgebraicSystem, branch: SolutionBranch) -> bool:
    """True iff the branch annihilates every equation of the system.

    Free unknowns and parameters are transcendentals; "=0" constraints
    are applied as rewrite rules where they are linear.
    """
    bindings = {sx.sym(n): v for n, v in branch.assignment}
    rules = [c for c, rel in branch.constraints if rel == ISZERO]
    unknown_set = set(sys.unknowns)
    for eq in sys.equations:
        residual = sx.substitute(eq.lhs, bindings)
        num, _ = sx.as_fraction(residual)
        num = sx.expand(num)
        if num == sx.ZERO:
            continue
        if rules and _reduce_with_rules(num, rules, unknown_set) == sx.ZERO:
            continue
        return False
    return True


def _subsume(branches: list[SolutionBranch]) -> list[SolutionBranch]:
    by_assignment: dict[tuple, list[SolutionBranch]] = {}
    for b in branches:
        key = tuple((n, e.key()) for n, e in b.assignment)
        by_assignment.setdefault(key, []).append(b)
    out = []
    for group in by_assignment.values():
        group.sort(key=lambda b: len(b.constraints))
        keep: list[SolutionBranch] = []
        for b in group:
            cset = set(b.constraints)
            if any(set(k.constraints) < cset or set(k.constraints) == cset
                   for k in keep):
                continue
            keep.append(b)
        out.extend(keep)
    return out


def solve_system(sys: AlgebraicSystem,
                 limits: SolverLimits | None = None) -> SolveOutcome:
    """Enumerate solution branches of a parametric polynomial system."""
    limits = limits or SolverLimits()
    if len(sys.unknowns) > MAX_UNKNOWNS:
        raise ScopeError(f"more than {MAX_UNKNOWNS} unknowns")
    unknown_set = set(sys.unknowns)
    for eq in sys.equations:
        deg = _total_unknown_degree(eq.lhs, unknown_set)
        if deg > MAX_TOTAL_DEGREE:
            raise ScopeError(
                f"equation {eq.origin} has total degree {deg} in the unknowns "
                f"(cap {MAX_TOTAL_DEGREE})")
    search = _Search(sys, limits)
    search.run(_State(equations=[eq.lhs for eq in sys.equations],
                      assignment=[], constraints=[], depth=0))
    branches = _subsume(search.leaves)
    branches.sort(key=lambda b: b.sort_key())
    return SolveOutcome(branches=branches, complete=search.complete,
                        branches_explored=search.paths + 1,
                        discarded_unsound=search.discarded_unsound)


def _total_unknown_degree(e: Expr, unknowns: set[str]) -> int:
    best = 0
    for t in sx.sum_terms(e):
        d = 0
        _, mon = sx.split_coeff(t)
        for f in sx.product_factors(mon) if mon is not None else ():
            base, n = f, 1
            if isinstance(f, Power):
                base, n = f.base, f.exponent
            if isinstance(base, Symbol) and base.name in unknowns:
                d += max(n, 0)
        best = max(best, d)
    return best
