"""Polynomial algebra in the auxiliary function phi with phi' = phi^2 + k.

Everything after the wave reduction happens inside this ring: the
power-series ansatz, its xi-derivatives, degree balancing, and the
collection of the coefficient equations.  No free phi' symbol ever
exists; differentiation is closed by the quadratic rule.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from . import symexpr as sx
from .symexpr import Deriv, Expr, Power, Product, Sum, Symbol
from .wave_reduction import ODESystem, XI

__all__ = [
    "PhiPoly", "Ansatz", "AlgEquation", "AlgebraicSystem",
    "BalanceError", "BalanceFailure", "BalanceAmbiguous",
    "PHI", "RICCATI_K", "make_ansatz", "phi_derivative", "balance",
    "substitute_and_collect", "degree_forms",
]

PHI = "phi"
RICCATI_K = "k"

_K = sx.sym(RICCATI_K)


class BalanceError(Exception):
    pass


class BalanceFailure(BalanceError):
    """No positive integer balance exists; carries the degree forms."""

    def __init__(self, message: str, forms):
        super().__init__(message)
        self.forms = forms


class BalanceAmbiguous(BalanceError):
    """The balance system is underdetermined; an explicit override helps."""


@dataclass(frozen=True)
class PhiPoly:
    """Finite map degree -> coefficient; coefficients are phi-free Exprs."""
    coeffs: tuple[tuple[int, Expr], ...]

    @staticmethod
    def from_dict(d: dict[int, Expr]) -> "PhiPoly":
        items = tuple(sorted((i, c) for i, c in d.items() if c != sx.ZERO))
        for i, _ in items:
            if i < 0:
                raise ValueError("phi polynomials have nonnegative degrees")
        return PhiPoly(items)

    @staticmethod
    def constant(c: Expr) -> "PhiPoly":
        return PhiPoly.from_dict({0: c})

    def as_dict(self) -> dict[int, Expr]:
        return dict(self.coeffs)

    def degree(self) -> int:
        return self.coeffs[-1][0] if self.coeffs else -1

    def add(self, other: "PhiPoly") -> "PhiPoly":
        out = self.as_dict()
        for i, c in other.coeffs:
            out[i] = sx.add(out.get(i, sx.ZERO), c)
        return PhiPoly.from_dict(out)

    def mul(self, other: "PhiPoly") -> "PhiPoly":
        out: dict[int, Expr] = {}
        for i, a in self.coeffs:
            for j, b in other.coeffs:
                out[i + j] = sx.add(out.get(i + j, sx.ZERO), sx.expand(sx.mul(a, b)))
        return PhiPoly.from_dict(out)

    def pow(self, n: int) -> "PhiPoly":
        if n < 0:
            raise ValueError("negative phi power")
        out = PhiPoly.constant(sx.ONE)
        for _ in range(n):
            out = out.mul(self)
        return out

    def scale(self, c: Expr) -> "PhiPoly":
        return PhiPoly.from_dict(
            {i: sx.expand(sx.mul(c, coeff)) for i, coeff in self.coeffs})

    def to_expr(self) -> Expr:
        phi = sx.sym(PHI)
        return sx.add(*[sx.mul(c, sx.pow_(phi, i)) for i, c in self.coeffs])


def phi_derivative(p: PhiPoly) -> PhiPoly:
    """d/dxi under the closure rule: (c*phi^i)' = i*c*phi^(i+1) + i*c*k*phi^(i-1)."""
    out: dict[int, Expr] = {}

    def bump(i: int, c: Expr) -> None:
        out[i] = sx.add(out.get(i, sx.ZERO), c)

    for i, c in p.coeffs:
        if i == 0:
            continue
        bump(i + 1, sx.mul(sx.rat(i), c))
        bump(i - 1, sx.expand(sx.mul(sx.rat(i), c, _K)))
    return PhiPoly.from_dict(out)


@dataclass(frozen=True)
class Ansatz:
    """Truncated phi power series for u (and v when present)."""
    m: int
    n: int | None
    u_symbols: tuple[str, ...]
    v_symbols: tuple[str, ...]

    def u_poly(self) -> PhiPoly:
        return PhiPoly.from_dict(
            {i: sx.sym(s) for i, s in enumerate(self.u_symbols)})

    def v_poly(self) -> PhiPoly | None:
        if self.n is None:
            return None
        return PhiPoly.from_dict(
            {j: sx.sym(s) for j, s in enumerate(self.v_symbols)})

    def unknowns(self) -> tuple[str, ...]:
        return self.u_symbols + self.v_symbols

    def leading(self) -> tuple[str, ...]:
        out = (self.u_symbols[-1],)
        if self.v_symbols:
            out += (self.v_symbols[-1],)
        return out


def make_ansatz(m: int, n: int | None = None) -> Ansatz:
    if m < 1 or (n is not None and n < 1):
        raise ValueError("ansatz degrees must be positive")
    u_symbols = tuple(f"a{i}" for i in range(m + 1))
    v_symbols = tuple(f"b{j}" for j in range(n + 1)) if n is not None else ()
    return Ansatz(m=m, n=n, u_symbols=u_symbols, v_symbols=v_symbols)


# ---------------------------------------------------------------------------
# Balancing
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DegreeForm:
    """Affine phi-degree c + alpha*m + beta*n of one monomial class."""
    const: int
    alpha: int
    beta: int

    def __str__(self):
        parts = []
        if self.alpha:
            parts.append("m" if self.alpha == 1 else f"{self.alpha}m")
        if self.beta:
            parts.append("n" if self.beta == 1 else f"{self.beta}n")
        if self.const or not parts:
            parts.append(str(self.const))
        return "+".join(parts)

    def dominates(self, other: "DegreeForm") -> bool:
        """Pointwise > over the whole domain m,n >= 1.

        Forms that merely tie somewhere on the boundary stay in the
        maximal set: a tie is exactly what balancing exploits.
        """
        da = self.alpha - other.alpha
        db = self.beta - other.beta
        dc = self.const - other.const
        return da >= 0 and db >= 0 and dc + da + db >= 1


def _monomial_form(t: Expr, unknowns: tuple[str, ...]) -> DegreeForm:
    const = alpha = beta = 0
    for f in sx.product_factors(t):
        base, n = f, 1
        if isinstance(f, Power):
            base, n = f.base, f.exponent
        if isinstance(base, Symbol) and base.name in unknowns:
            if base.name == unknowns[0]:
                alpha += n
            else:
                beta += n
        elif isinstance(base, Deriv) and isinstance(base.arg, Symbol) \
                and base.arg.name in unknowns:
            order = len(base.wrt)
            if base.arg.name == unknowns[0]:
                alpha += n
            else:
                beta += n
            const += order * n
    return DegreeForm(const, alpha, beta)


def degree_forms(eq: Expr, unknowns: tuple[str, ...]) -> list[DegreeForm]:
    """Distinct phi-degree forms of the monomials of one expanded equation."""
    forms = {_monomial_form(t, unknowns) for t in sx.sum_terms(eq)}
    forms = {f for f in forms if f.alpha or f.beta}  # parameter-only terms carry no ansatz degree
    return sorted(forms, key=lambda f: (f.const, f.alpha, f.beta))


def balance(ode: ODESystem) -> tuple[int, int | None]:
    """Determine the ansatz degrees by equating maximal degree forms.

    For each equation the undominated (maximal) forms must all agree; when
    a single form dominates everything it is equated with the next layer.
    The resulting integer linear system must have a unique positive
    integer solution.
    """
    two_functions = len(ode.unknowns) == 2
    constraints: list[tuple[DegreeForm, DegreeForm]] = []
    all_forms: list[list[DegreeForm]] = []
    for eq in ode.equations:
        forms = degree_forms(eq, ode.unknowns)
        all_forms.append(forms)
        if len(forms) < 2:
            continue
        maximal = [f for f in forms
                   if not any(g != f and g.dominates(f) for g in forms)]
        if len(maximal) >= 2:
            top = maximal
            for i in range(1, len(top)):
                constraints.append((top[0], top[i]))
        else:
            rest = [f for f in forms if f != maximal[0]]
            second = [f for f in rest
                      if not any(g != f and g.dominates(f) for g in rest)]
            for f in second:
                constraints.append((maximal[0], f))
    if not constraints:
        raise BalanceAmbiguous(
            "no balancing constraints arise; pass explicit degrees with --degrees")

    # Solve the affine system over the rationals.
    nvars = 2 if two_functions else 1
    rows = []
    for f, g in constraints:
        row = [Fraction(f.alpha - g.alpha)]
        if two_functions:
            row.append(Fraction(f.beta - g.beta))
        row.append(Fraction(g.const - f.const))
        rows.append(row)
    solution = _solve_linear(rows, nvars)
    if solution is None:
        raise BalanceFailure(
            "degree forms cannot be balanced: "
            + "; ".join(f"{f} = {g}" for f, g in constraints),
            [str(f) for forms in all_forms for f in forms])
    if solution == "underdetermined":
        raise BalanceAmbiguous(
            "balance is underdetermined; pass explicit degrees with --degrees")
    values = []
    for val in solution:
        if val.denominator != 1 or val < 1:
            raise BalanceFailure(
                f"balance solution {tuple(map(str, solution))} is not a "
                "positive integer pair",
                [str(f) for forms in all_forms for f in forms])
        values.append(int(val))
    return (values[0], values[1] if two_functions else None)


def _solve_linear(rows: list[list[Fraction]], nvars: int):
    """Gaussian elimination on an augmented matrix.

    Returns the unique solution vector, None when inconsistent, or the
    string "underdetermined".
    """
    mat = [row[:] for row in rows]
    pivots = []
    r = 0
    for c in range(nvars):
        pivot = next((i for i in range(r, len(mat)) if mat[i][c] != 0), None)
        if pivot is None:
            continue
        mat[r], mat[pivot] = mat[pivot], mat[r]
        mat[r] = [v / mat[r][c] for v in mat[r]]
        for i in range(len(mat)):
            if i != r and mat[i][c] != 0:
                mat[i] = [a - mat[i][c] * b for a, b in zip(mat[i], mat[r])]
        pivots.append(c)
        r += 1
    for i in range(r, len(mat)):
        if mat[i][nvars] != 0:
            return None
    if len(pivots) < nvars:
        return "underdetermined"
    out = [Fraction(0)] * nvars
    for i, c in enumerate(pivots):
        out[c] = mat[i][nvars]
    return out


# ---------------------------------------------------------------------------
# Substitution and coefficient collection
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AlgEquation:
    """One collected coefficient: origin (equation index, phi power)."""
    origin: tuple[int, int]
    lhs: Expr


@dataclass(frozen=True)
class AlgebraicSystem:
    equations: tuple[AlgEquation, ...]
    unknowns: tuple[str, ...]
    parameters: tuple[str, ...]
    leading: tuple[str, ...] = ()


def _phi_poly_of(e: Expr, atoms: dict[Expr, PhiPoly]) -> PhiPoly:
    hit = atoms.get(e)
    if hit is not None:
        return hit
    if isinstance(e, Sum):
        out = PhiPoly(())
        for t in e.terms:
            out = out.add(_phi_poly_of(t, atoms))
        return out
    if isinstance(e, Product):
        out = PhiPoly.constant(sx.ONE)
        for f in e.factors:
            out = out.mul(_phi_poly_of(f, atoms))
        return out
    if isinstance(e, Power):
        if e.exponent < 0:
            raise sx.NotPolynomialError("negative power in an ODE equation")
        return _phi_poly_of(e.base, atoms).pow(e.exponent)
    if isinstance(e, Deriv):
        raise sx.NotPolynomialError(
            f"unmapped derivative {e!r} in the ODE system")
    # parameters, wave speed, rationals: phi-free coefficients
    return PhiPoly.constant(e)


def substitute_and_collect(ode: ODESystem, ansatz: Ansatz) -> AlgebraicSystem:
    """Replace unknown functions by their phi ansatz and collect powers.

    Every xi-derivative is computed inside the phi ring, each phi-power
    coefficient becomes one algebraic equation, and identically zero
    coefficients are dropped.
    """
    if len(ode.unknowns) == 2 and ansatz.n is None:
        raise ValueError("two-function systems need both ansatz degrees")
    reserved = sorted((set(ode.parameters) | set(ode.unknowns)
                       | {ode.wave_speed}) & {RICCATI_K, PHI})
    if reserved:
        raise ValueError(f"{reserved} are reserved names in the phi expansion; "
                         "rename them in the input system")
    taken = set(ode.parameters) | set(ode.unknowns) | {ode.wave_speed}
    clash = sorted(set(ansatz.unknowns()) & taken)
    if clash:
        raise ValueError(
            f"ansatz coefficient names collide with declared names: {clash}; "
            "rename the parameter(s)")
    max_order = max((_orders(eq) for eq in ode.equations), default=0)

    atoms: dict[Expr, PhiPoly] = {}
    polys = [ansatz.u_poly()]
    if len(ode.unknowns) == 2:
        vp = ansatz.v_poly()
        assert vp is not None
        polys.append(vp)
    for name, base_poly in zip(ode.unknowns, polys):
        atoms[sx.sym(name)] = base_poly
        current = base_poly
        for order in range(1, max_order + 1):
            current = phi_derivative(current)
            atoms[sx.deriv(sx.sym(name), (XI,) * order)] = current

    equations: list[AlgEquation] = []
    for idx, eq in enumerate(ode.equations):
        poly = _phi_poly_of(eq, atoms)
        for power, coeff in poly.coeffs:
            coeff = sx.expand(coeff)
            if coeff != sx.ZERO:
                equations.append(AlgEquation(origin=(idx, power), lhs=coeff))
    unknowns = ansatz.unknowns() + (ode.wave_speed,)
    parameters = (RICCATI_K,) + tuple(ode.parameters)
    return AlgebraicSystem(equations=tuple(equations), unknowns=unknowns,
                           parameters=parameters, leading=ansatz.leading())


def _orders(eq: Expr) -> int:
    from .wave_reduction import deriv_order
    return deriv_order(eq)
