"""Exact symbolic expressions over arbitrary-precision rationals.

The node set is deliberately small: rationals, named symbols, flattened
sums and products, integer powers, a handful of opaque function nodes
(tan/cot/tanh/coth) and inert derivative markers.  Every constructor
returns a canonical tree, so structural equality doubles as semantic
equality for expanded polynomial expressions.  All floats are confined
to :func:`eval_numeric`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Mapping

__all__ = [
    "Expr", "Rational", "Symbol", "Sum", "Product", "Power", "Func", "Deriv",
    "ExprError", "MalformedExpressionError", "NotPolynomialError",
    "ResourceLimitError", "EvaluationSingularError",
    "rat", "sym", "add", "sub", "neg", "mul", "div", "pow_", "func", "deriv",
    "normalize", "differentiate", "substitute", "expand", "as_polynomial",
    "eval_numeric", "free_symbols", "contains_symbol", "rewrite_squares",
    "as_fraction", "integer_normalize", "scale_expr", "poly_degree",
    "sum_terms", "product_factors", "split_coeff",
    "ZERO", "ONE", "MINUS_ONE", "FUNC_KINDS",
]

DEFAULT_EXPANSION_CAP = 100_000

FUNC_KINDS = ("tan", "cot", "tanh", "coth")


class ExprError(Exception):
    """Base class for expression-engine failures."""


class MalformedExpressionError(ExprError):
    """Raised for structurally invalid input (zero denominators etc.)."""


class NotPolynomialError(ExprError):
    """Raised when a polynomial view of an expression does not exist."""


class ResourceLimitError(ExprError):
    """Raised when expansion would exceed the monomial cap."""


class EvaluationSingularError(ExprError):
    """Numeric evaluation hit a pole; carries the offending subexpression."""

    def __init__(self, message: str, subexpression: "Expr"):
        super().__init__(message)
        self.subexpression = subexpression


# ---------------------------------------------------------------------------
# Node types
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False, repr=False)
class Expr:
    """Base node.  Instances are immutable and shareable."""

    def _build_key(self):
        raise NotImplementedError

    def key(self):
        """Total-order key: variant rank, then contents, recursively."""
        k = getattr(self, "_key", None)
        if k is None:
            k = self._build_key()
            object.__setattr__(self, "_key", k)
        return k

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, Expr):
            return NotImplemented
        return self.key() == other.key()

    def __hash__(self):
        h = getattr(self, "_hash", None)
        if h is None:
            h = hash(self.key())
            object.__setattr__(self, "_hash", h)
        return h

    def __lt__(self, other: "Expr"):
        return self.key() < other.key()

    def __repr__(self):
        try:
            from .pde_parser import render_expr
            return render_expr(self, "dsl")
        except ImportError:
            return f"<{type(self).__name__} {self.key()!r}>"

    # Natural math syntax; every operator routes through the canonical
    # constructors, so composed trees are always normalized.
    def __add__(self, other):
        return add(self, _coerce(other))

    def __radd__(self, other):
        return add(_coerce(other), self)

    def __sub__(self, other):
        return sub(self, _coerce(other))

    def __rsub__(self, other):
        return sub(_coerce(other), self)

    def __mul__(self, other):
        return mul(self, _coerce(other))

    def __rmul__(self, other):
        return mul(_coerce(other), self)

    def __truediv__(self, other):
        return div(self, _coerce(other))

    def __rtruediv__(self, other):
        return div(_coerce(other), self)

    def __pow__(self, n: int):
        return pow_(self, n)

    def __neg__(self):
        return neg(self)


@dataclass(frozen=True, eq=False, repr=False)
class Rational(Expr):
    value: Fraction

    def _build_key(self):
        return (0, self.value.numerator, self.value.denominator)


@dataclass(frozen=True, eq=False, repr=False)
class Symbol(Expr):
    name: str

    def _build_key(self):
        return (1, self.name)


@dataclass(frozen=True, eq=False, repr=False)
class Func(Expr):
    kind: str
    arg: Expr

    def _build_key(self):
        return (2, self.kind, self.arg.key())


@dataclass(frozen=True, eq=False, repr=False)
class Deriv(Expr):
    """Inert derivative of ``arg`` with respect to the named variables.

    Mixed partials commute for the smooth functions this engine models,
    so ``wrt`` is kept sorted.
    """
    arg: Expr
    wrt: tuple[str, ...]

    def _build_key(self):
        return (3, self.arg.key(), self.wrt)


@dataclass(frozen=True, eq=False, repr=False)
class Power(Expr):
    base: Expr
    exponent: int

    def _build_key(self):
        return (4, self.base.key(), self.exponent)


@dataclass(frozen=True, eq=False, repr=False)
class Product(Expr):
    factors: tuple[Expr, ...]

    def _build_key(self):
        return (5, tuple(f.key() for f in self.factors))


@dataclass(frozen=True, eq=False, repr=False)
class Sum(Expr):
    terms: tuple[Expr, ...]

    def _build_key(self):
        return (6, tuple(t.key() for t in self.terms))


ZERO = Rational(Fraction(0))
ONE = Rational(Fraction(1))
MINUS_ONE = Rational(Fraction(-1))


def _coerce(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, (int, Fraction)):
        return Rational(Fraction(x))
    raise TypeError(f"cannot interpret {type(x).__name__} as an expression")


# ---------------------------------------------------------------------------
# Canonical constructors
# ---------------------------------------------------------------------------

def rat(p, q=1) -> Rational:
    """Exact rational; raises on a zero denominator."""
    try:
        return Rational(Fraction(p, q))
    except ZeroDivisionError as exc:
        raise MalformedExpressionError("zero denominator in rational") from exc


def sym(name: str) -> Symbol:
    return Symbol(name)


def split_coeff(t: Expr) -> tuple[Fraction, Expr | None]:
    """Split a canonical term into (rational coefficient, monomial part).

    The monomial part is None for pure constants.
    """
    if isinstance(t, Rational):
        return t.value, None
    if isinstance(t, Product) and isinstance(t.factors[0], Rational):
        rest = t.factors[1:]
        mon = rest[0] if len(rest) == 1 else Product(rest)
        return t.factors[0].value, mon
    return Fraction(1), t


def _with_coeff(c: Fraction, mon: Expr) -> Expr:
    if c == 0:
        return ZERO
    if c == 1:
        return mon
    if isinstance(mon, Product):
        return Product((Rational(c),) + mon.factors)
    return Product((Rational(c), mon))


def add(*terms) -> Expr:
    """Flattened, like-term-collected, canonically ordered sum."""
    flat: list[Expr] = []
    for t in terms:
        t = _coerce(t)
        if isinstance(t, Sum):
            flat.extend(t.terms)
        else:
            flat.append(t)
    const = Fraction(0)
    by_mon: dict[Expr, Fraction] = {}
    for t in flat:
        c, mon = split_coeff(t)
        if mon is None:
            const += c
        else:
            by_mon[mon] = by_mon.get(mon, Fraction(0)) + c
    parts = [_with_coeff(c, mon) for mon, c in by_mon.items() if c != 0]
    parts.sort(key=lambda e: e.key())
    if const != 0:
        parts.insert(0, Rational(const))
    if not parts:
        return ZERO
    if len(parts) == 1:
        return parts[0]
    return Sum(tuple(parts))


def _factor_base_exp(f: Expr) -> tuple[Expr, int]:
    if isinstance(f, Power):
        return f.base, f.exponent
    return f, 1


def mul(*factors) -> Expr:
    """Flattened product with rational folding and power collection."""
    flat: list[Expr] = []
    for f in factors:
        f = _coerce(f)
        if isinstance(f, Product):
            flat.extend(f.factors)
        else:
            flat.append(f)
    coeff = Fraction(1)
    powers: dict[Expr, int] = {}
    for f in flat:
        if isinstance(f, Rational):
            coeff *= f.value
        else:
            base, n = _factor_base_exp(f)
            powers[base] = powers.get(base, 0) + n
    if coeff == 0:
        return ZERO
    out: list[Expr] = []
    refold = False
    for base, n in powers.items():
        if n == 0:
            continue
        built = pow_(base, n)
        if isinstance(built, Rational):
            coeff *= built.value
        else:
            refold = refold or isinstance(built, Product)
            out.append(built)
    if coeff == 0:
        return ZERO
    if refold:
        # pow_ distributed over a nested non-canonical product; fold again.
        return mul(Rational(coeff), *out)
    out.sort(key=lambda e: (_factor_base_exp(e)[0].key(), _factor_base_exp(e)[1]))
    if not out:
        return Rational(coeff)
    if coeff != 1:
        out.insert(0, Rational(coeff))
    if len(out) == 1:
        return out[0]
    return Product(tuple(out))


def pow_(base: Expr, n: int) -> Expr:
    if not isinstance(n, int):
        raise MalformedExpressionError("power exponents must be integers")
    base = _coerce(base)
    if n == 0:
        return ONE
    if n == 1:
        return base
    if isinstance(base, Rational):
        if base.value == 0 and n < 0:
            raise MalformedExpressionError("zero raised to a negative power")
        return Rational(base.value ** n)
    if isinstance(base, Power):
        return pow_(base.base, base.exponent * n)
    if isinstance(base, Product):
        return mul(*[pow_(f, n) for f in base.factors])
    return Power(base, n)


def neg(e: Expr) -> Expr:
    return mul(MINUS_ONE, e)


def sub(a: Expr, b) -> Expr:
    return add(a, neg(_coerce(b)))


def div(a: Expr, b) -> Expr:
    return mul(_coerce(a), pow_(_coerce(b), -1))


def func(kind: str, arg: Expr) -> Func:
    if kind not in FUNC_KINDS:
        raise MalformedExpressionError(f"unknown function kind {kind!r}")
    return Func(kind, _coerce(arg))


def deriv(arg: Expr, wrt: Iterable[str]) -> Expr:
    """Inert derivative node, linear in its argument."""
    wrt = tuple(sorted(wrt))
    if not wrt:
        raise MalformedExpressionError("derivative needs at least one variable")
    arg = _coerce(arg)
    if isinstance(arg, Rational):
        return ZERO
    if isinstance(arg, Sum):
        return add(*[deriv(t, wrt) for t in arg.terms])
    c, mon = split_coeff(arg)
    if mon is None:
        return ZERO
    if c != 1:
        return mul(Rational(c), deriv(mon, wrt))
    if isinstance(mon, Deriv):
        return Deriv(mon.arg, tuple(sorted(mon.wrt + wrt)))
    return Deriv(mon, wrt)


def sum_terms(e: Expr) -> tuple[Expr, ...]:
    return e.terms if isinstance(e, Sum) else (e,)


def product_factors(e: Expr) -> tuple[Expr, ...]:
    return e.factors if isinstance(e, Product) else (e,)


# ---------------------------------------------------------------------------
# Core operations
# ---------------------------------------------------------------------------

def normalize(e: Expr) -> Expr:
    """Rebuild a tree through the canonical constructors (idempotent)."""
    e = _coerce(e)
    if isinstance(e, (Rational, Symbol)):
        return e
    if isinstance(e, Sum):
        return add(*[normalize(t) for t in e.terms])
    if isinstance(e, Product):
        return mul(*[normalize(f) for f in e.factors])
    if isinstance(e, Power):
        return pow_(normalize(e.base), e.exponent)
    if isinstance(e, Func):
        return func(e.kind, normalize(e.arg))
    if isinstance(e, Deriv):
        return deriv(normalize(e.arg), e.wrt)
    raise MalformedExpressionError(f"unknown node {type(e).__name__}")


def free_symbols(e: Expr) -> frozenset[str]:
    cached = getattr(e, "_fsyms", None)
    if cached is not None:
        return cached
    if isinstance(e, Rational):
        out: frozenset[str] = frozenset()
    elif isinstance(e, Symbol):
        out = frozenset((e.name,))
    elif isinstance(e, Sum):
        out = frozenset().union(*[free_symbols(t) for t in e.terms])
    elif isinstance(e, Product):
        out = frozenset().union(*[free_symbols(f) for f in e.factors])
    elif isinstance(e, Power):
        out = free_symbols(e.base)
    elif isinstance(e, (Func, Deriv)):
        out = free_symbols(e.arg)
    else:
        raise MalformedExpressionError(f"unknown node {type(e).__name__}")
    object.__setattr__(e, "_fsyms", out)
    return out


def contains_symbol(e: Expr, name: str) -> bool:
    return name in free_symbols(e)


_FUNC_DERIVATIVES: dict[str, Callable[[Expr], Expr]] = {
    "tan": lambda a: add(ONE, pow_(Func("tan", a), 2)),
    "cot": lambda a: add(MINUS_ONE, neg(pow_(Func("cot", a), 2))),
    "tanh": lambda a: sub(ONE, pow_(Func("tanh", a), 2)),
    "coth": lambda a: sub(ONE, pow_(Func("coth", a), 2)),
}


def differentiate(e: Expr, name: str, dependent: frozenset[str] = frozenset()) -> Expr:
    """Exact derivative with respect to ``name``.

    Symbols listed in ``dependent`` are treated as unknown functions of
    ``name``; their derivatives become inert Deriv nodes.
    """
    e = _coerce(e)
    if isinstance(e, Rational):
        return ZERO
    if isinstance(e, Symbol):
        if e.name == name:
            return ONE
        if e.name in dependent:
            return deriv(e, (name,))
        return ZERO
    if isinstance(e, Sum):
        return add(*[differentiate(t, name, dependent) for t in e.terms])
    if isinstance(e, Product):
        parts = []
        for i, f in enumerate(e.factors):
            df = differentiate(f, name, dependent)
            if df == ZERO:
                continue
            rest = e.factors[:i] + e.factors[i + 1:]
            parts.append(mul(df, *rest))
        return add(*parts)
    if isinstance(e, Power):
        db = differentiate(e.base, name, dependent)
        if db == ZERO:
            return ZERO
        return mul(rat(e.exponent), pow_(e.base, e.exponent - 1), db)
    if isinstance(e, Func):
        da = differentiate(e.arg, name, dependent)
        if da == ZERO:
            return ZERO
        return mul(_FUNC_DERIVATIVES[e.kind](e.arg), da)
    if isinstance(e, Deriv):
        syms = free_symbols(e.arg)
        if name in syms or (dependent & syms):
            return deriv(e, (name,))
        return ZERO
    raise MalformedExpressionError(f"unknown node {type(e).__name__}")


def substitute(e: Expr, bindings: Mapping[Expr, Expr]) -> Expr:
    """Simultaneous substitution of canonical subtrees, then normalize."""
    table = {normalize(k): normalize(_coerce(v)) for k, v in bindings.items()}
    if not table:
        return normalize(e)

    def walk(e: Expr) -> Expr:
        hit = table.get(e)
        if hit is not None:
            return hit
        if isinstance(e, (Rational, Symbol)):
            return e
        if isinstance(e, Sum):
            return add(*[walk(t) for t in e.terms])
        if isinstance(e, Product):
            return mul(*[walk(f) for f in e.factors])
        if isinstance(e, Power):
            return pow_(walk(e.base), e.exponent)
        if isinstance(e, Func):
            return func(e.kind, walk(e.arg))
        if isinstance(e, Deriv):
            return deriv(walk(e.arg), e.wrt)
        raise MalformedExpressionError(f"unknown node {type(e).__name__}")

    return walk(normalize(e))


def expand(e: Expr, cap: int = DEFAULT_EXPANSION_CAP) -> Expr:
    """Fully distribute products and positive powers over sums.

    Func and Deriv nodes are opaque atoms.  Raises ResourceLimitError when
    the intermediate monomial count would exceed ``cap``.
    """
    e = normalize(e)

    def check(n: int) -> None:
        if n > cap:
            raise ResourceLimitError(f"expansion exceeds {cap} monomials")

    def ex(e: Expr) -> list[Expr]:
        if isinstance(e, (Rational, Symbol, Func, Deriv)):
            return [e]
        if isinstance(e, Sum):
            out: list[Expr] = []
            for t in e.terms:
                out.extend(ex(t))
                check(len(out))
            return out
        if isinstance(e, Product):
            running: list[Expr] = [ONE]
            for f in e.factors:
                fterms = ex(f)
                check(len(running) * len(fterms))
                running = [mul(a, b) for a in running for b in fterms]
            return running
        if isinstance(e, Power):
            if e.exponent < 0:
                inner = expand(e.base, cap)
                return [pow_(inner, e.exponent)]
            base_terms = ex(e.base)
            if len(base_terms) == 1:
                return [pow_(base_terms[0], e.exponent)]
            running = [ONE]
            for _ in range(e.exponent):
                check(len(running) * len(base_terms))
                running = [mul(a, b) for a in running for b in base_terms]
                # collect as we go to keep intermediate lists small
                running = list(sum_terms(add(*running)))
            return running
        raise MalformedExpressionError(f"unknown node {type(e).__name__}")

    return add(*ex(e))


def is_expanded(e: Expr) -> bool:
    """True when a canonical expression is a flat sum of monomials."""
    for t in sum_terms(e):
        for f in product_factors(t):
            if isinstance(f, Rational):
                continue
            base, n = _factor_base_exp(f)
            if n <= 0 or not isinstance(base, (Symbol, Func, Deriv)):
                return False
    return True


def as_polynomial(e: Expr, name: str) -> dict[int, Expr]:
    """Degree -> coefficient map of an expanded polynomial in ``name``.

    The input must already be canonical (constructor-built).  Zero
    coefficients are never stored; reassembling the map gives back the
    input.  Raises NotPolynomialError when ``name`` occurs inside a
    Func/Deriv argument, a non-monomial power base, or with a negative
    exponent.
    """
    s = Symbol(name)
    buckets: dict[int, list[Expr]] = {}
    for t in sum_terms(e):
        degree = 0
        rest: list[Expr] = []
        for f in product_factors(t):
            base, n = _factor_base_exp(f)
            if base == s:
                if n < 0:
                    raise NotPolynomialError(f"negative power of {name}")
                degree += n
            elif contains_symbol(f, name):
                raise NotPolynomialError(
                    f"{name} occurs inside a non-polynomial factor")
            else:
                rest.append(f)
        buckets.setdefault(degree, []).append(mul(*rest) if rest else ONE)
    out: dict[int, Expr] = {}
    for d, parts in buckets.items():
        c = add(*parts)
        if c != ZERO:
            out[d] = c
    return out


def poly_degree(e: Expr, name: str) -> int:
    """Degree in ``name`` (0 when absent); -1 for the zero polynomial."""
    p = as_polynomial(e, name)
    return max(p) if p else -1


def eval_numeric(e: Expr, bindings: Mapping[str, float]) -> float:
    """Evaluate to an IEEE double; every free symbol must be bound."""
    if isinstance(e, Rational):
        return float(e.value)
    if isinstance(e, Symbol):
        try:
            return float(bindings[e.name])
        except KeyError as exc:
            raise ExprError(f"unbound symbol {e.name!r}") from exc
    if isinstance(e, Sum):
        return math.fsum(eval_numeric(t, bindings) for t in e.terms)
    if isinstance(e, Product):
        out = 1.0
        for f in e.factors:
            out *= eval_numeric(f, bindings)
        return out
    if isinstance(e, Power):
        b = eval_numeric(e.base, bindings)
        if e.exponent < 0 and b == 0.0:
            raise EvaluationSingularError("division by zero", e)
        return b ** e.exponent
    if isinstance(e, Func):
        a = eval_numeric(e.arg, bindings)
        if e.kind == "tan":
            return math.tan(a)
        if e.kind == "cot":
            s = math.sin(a)
            if s == 0.0:
                raise EvaluationSingularError("cot pole", e)
            return math.cos(a) / s
        if e.kind == "tanh":
            return math.tanh(a)
        if e.kind == "coth":
            s = math.sinh(a)
            if s == 0.0:
                raise EvaluationSingularError("coth pole", e)
            return math.cosh(a) / s
    if isinstance(e, Deriv):
        raise ExprError("cannot numerically evaluate an inert derivative")
    raise MalformedExpressionError(f"unknown node {type(e).__name__}")


def rewrite_squares(e: Expr, rules: Mapping[str, Expr]) -> Expr:
    """Reduce powers of auxiliary square-root symbols.

    For each rule ``name -> q`` every ``name**n`` is rewritten to
    ``q**(n//2) * name**(n%2)``.  Iterates to a fixpoint since product
    collection may recreate even powers.
    """
    rules = {name: normalize(q) for name, q in rules.items()}

    def walk(e: Expr) -> Expr:
        if isinstance(e, (Rational, Symbol)):
            return e
        if isinstance(e, Power):
            base = walk(e.base)
            if isinstance(base, Symbol) and base.name in rules:
                q, r = divmod(e.exponent, 2)
                return mul(pow_(rules[base.name], q), pow_(base, r))
            return pow_(base, e.exponent)
        if isinstance(e, Sum):
            return add(*[walk(t) for t in e.terms])
        if isinstance(e, Product):
            return mul(*[walk(f) for f in e.factors])
        if isinstance(e, Func):
            return func(e.kind, walk(e.arg))
        if isinstance(e, Deriv):
            return deriv(walk(e.arg), e.wrt)
        raise MalformedExpressionError(f"unknown node {type(e).__name__}")

    cur = normalize(e)
    for _ in range(64):
        nxt = walk(cur)
        if nxt == cur:
            return cur
        cur = nxt
    raise ResourceLimitError("square rewriting did not reach a fixpoint")


def as_fraction(e: Expr) -> tuple[Expr, Expr]:
    """Combine an expression into a single (numerator, denominator) pair.

    No GCD reduction is attempted; the pair is exact and normalized.
    """
    e = normalize(e)
    if isinstance(e, (Rational, Symbol, Func, Deriv)):
        if isinstance(e, Rational):
            return Rational(Fraction(e.value.numerator)), Rational(Fraction(e.value.denominator))
        return e, ONE
    if isinstance(e, Power):
        n, d = as_fraction(e.base)
        if e.exponent >= 0:
            return pow_(n, e.exponent), pow_(d, e.exponent)
        return pow_(d, -e.exponent), pow_(n, -e.exponent)
    if isinstance(e, Product):
        nums, dens = [], []
        for f in e.factors:
            n, d = as_fraction(f)
            nums.append(n)
            dens.append(d)
        return mul(*nums), mul(*dens)
    if isinstance(e, Sum):
        pairs = [as_fraction(t) for t in e.terms]
        den = mul(*[d for _, d in pairs])
        num_parts = []
        for i, (n, d) in enumerate(pairs):
            others = [pairs[j][1] for j in range(len(pairs)) if j != i]
            num_parts.append(mul(n, *others))
        return add(*num_parts), den
    raise MalformedExpressionError(f"unknown node {type(e).__name__}")


def scale_expr(e: Expr, c: Fraction) -> Expr:
    """Multiply by a rational constant, distributing over sum terms."""
    if c == 0:
        return ZERO
    return add(*[mul(Rational(c), t) for t in sum_terms(normalize(e))])


def integer_normalize(e: Expr) -> tuple[Expr, Fraction]:
    """Clear denominators and divide out integer content.

    Returns ``(primitive, scale)`` with ``primitive = scale * e``, the
    rational coefficients of ``primitive`` integral with gcd 1, and the
    canonically first term positive.  The zero expression maps to
    ``(0, 1)``.
    """
    e = normalize(e)
    coeffs = [split_coeff(t)[0] for t in sum_terms(e)]
    if e == ZERO:
        return ZERO, Fraction(1)
    lcm_den = 1
    for c in coeffs:
        lcm_den = lcm_den * c.denominator // math.gcd(lcm_den, c.denominator)
    gcd_num = 0
    for c in coeffs:
        gcd_num = math.gcd(gcd_num, abs((c * lcm_den).numerator))
    scale = Fraction(lcm_den, gcd_num)
    if coeffs[0] < 0:
        scale = -scale
    if scale == 1:
        return e, scale
    return scale_expr(e, scale), scale
