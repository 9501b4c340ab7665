"""Parser and renderers for the evolution-equation input language.

A system file looks like::

    system "coupled_mkdv"
    params eta
    functions u(x,t), v(x,t)
    eq: u_t = 1/2*u_xxx - 3*u^2*u_x + 3/2*v_xx + 3*D(u*v, x) - 3*eta*u_x

Subscript sugar (``u_xxx``) is accepted on declared function names only;
derivatives of compound expressions use the operator form ``D(expr, x, ...)``.
Number literals are integers or exact quotients; decimals are rejected so
the whole pipeline stays rational.  ``#`` starts a line comment.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction

from . import symexpr as sx
from .symexpr import Deriv, Expr, Func, Power, Product, Rational, Sum, Symbol

__all__ = [
    "ParseError", "PDESystem", "parse_system", "parse_expr", "render_expr",
    "ExprContext", "SQRT_POS", "SQRT_NEG", "SQRT_RULES",
]

INDEP_VARS = ("x", "t")

# Auxiliary square-root symbols: SQRT_POS**2 == k, SQRT_NEG**2 == -k.
# The leading '@' keeps them out of the identifier namespace.
SQRT_POS = "@sqrt_k"
SQRT_NEG = "@sqrt_neg_k"
SQRT_RULES = {SQRT_POS: sx.sym("k"), SQRT_NEG: sx.neg(sx.sym("k"))}


class ParseError(Exception):
    """Syntax or validation error with a 1-based source position."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{line}:{column}: {message}")
        self.message = message
        self.line = line
        self.column = column


@dataclass(frozen=True)
class PDESystem:
    name: str
    functions: tuple[tuple[str, tuple[str, str]], ...]
    parameters: tuple[str, ...]
    equations: tuple[Expr, ...]

    @property
    def function_names(self) -> tuple[str, ...]:
        return tuple(f[0] for f in self.functions)


# ---------------------------------------------------------------------------
# Lexer
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t]+)
  | (?P<comment>\#[^\n]*)
  | (?P<newline>\n)
  | (?P<number>\d+\.\d*|\.\d+|\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<string>"[^"\n]*")
  | (?P<op>[-+*/^(),=:])
    """,
    re.VERBOSE,
)


@dataclass
class _Token:
    kind: str
    text: str
    line: int
    column: int


def _lex(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    line, col = 1, 1
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        raw = m.group()
        if kind == "newline":
            tokens.append(_Token("newline", raw, line, col))
            line += 1
            col = 1
        elif kind in ("ws", "comment"):
            col += len(raw)
        elif kind == "number" and "." in raw:
            raise ParseError("decimal literals are not allowed; use a/b", line, col)
        else:
            tokens.append(_Token(kind, raw, line, col))
            col += len(raw)
        pos = m.end()
    tokens.append(_Token("eof", "", line, col))
    return tokens


# ---------------------------------------------------------------------------
# Expression parser
# ---------------------------------------------------------------------------

@dataclass
class ExprContext:
    """Name resolution for expression parsing.

    functions: names usable bare or with subscript sugar (u, u_xxx)
    parameters: plain symbols
    symbols: extra plain symbols (x, t, a0, ... for catalog expressions)
    allow_deriv: whether the D(...) operator form is accepted
    allow_funcs: whether tan/cot/tanh/coth/sqrt calls are accepted
    riccati_symbol: the name sqrt() arguments are resolved against
    """
    functions: tuple[str, ...] = ()
    parameters: tuple[str, ...] = ()
    symbols: tuple[str, ...] = ()
    allow_deriv: bool = True
    allow_funcs: bool = False
    riccati_symbol: str = "k"


class _Parser:
    def __init__(self, tokens: list[_Token], ctx: ExprContext):
        self.tokens = tokens
        self.pos = 0
        self.ctx = ctx

    # token helpers -----------------------------------------------------
    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def next(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def error(self, message: str, tok: _Token | None = None) -> ParseError:
        tok = tok or self.peek()
        return ParseError(message, tok.line, tok.column)

    def expect_op(self, text: str) -> _Token:
        tok = self.peek()
        if tok.kind == "op" and tok.text == text:
            return self.next()
        raise self.error(f"expected {text!r}")

    def at_op(self, text: str) -> bool:
        tok = self.peek()
        return tok.kind == "op" and tok.text == text

    def skip_newlines(self) -> None:
        while self.peek().kind == "newline":
            self.next()

    # grammar -----------------------------------------------------------
    def parse_expression(self) -> Expr:
        return self._additive()

    def _additive(self) -> Expr:
        out = self._multiplicative()
        while self.at_op("+") or self.at_op("-"):
            op = self.next().text
            rhs = self._multiplicative()
            out = sx.add(out, rhs) if op == "+" else sx.sub(out, rhs)
        return out

    def _multiplicative(self) -> Expr:
        out = self._unary()
        while self.at_op("*") or self.at_op("/"):
            op = self.next().text
            rhs = self._unary()
            try:
                out = sx.mul(out, rhs) if op == "*" else sx.div(out, rhs)
            except sx.MalformedExpressionError as exc:
                raise self.error(str(exc))
        return out

    def _unary(self) -> Expr:
        if self.at_op("-"):
            self.next()
            return sx.neg(self._unary())
        return self._power()

    def _power(self) -> Expr:
        base = self._primary()
        if not self.at_op("^"):
            return base
        self.next()
        exps = [self._exponent()]
        while self.at_op("^"):
            self.next()
            exps.append(self._exponent())
        n = exps[-1]
        for e in reversed(exps[:-1]):
            n = e ** n
        try:
            return sx.pow_(base, n)
        except sx.MalformedExpressionError as exc:
            raise self.error(str(exc))

    def _exponent(self) -> int:
        # integer literal, optionally signed or parenthesized
        if self.at_op("("):
            self.next()
            n = self._exponent()
            self.expect_op(")")
            return n
        sign = 1
        if self.at_op("-"):
            self.next()
            sign = -1
        tok = self.peek()
        if tok.kind != "number":
            raise self.error("power exponents must be integer literals")
        self.next()
        return sign * int(tok.text)

    def _primary(self) -> Expr:
        tok = self.peek()
        if tok.kind == "number":
            self.next()
            return sx.rat(int(tok.text))
        if tok.kind == "op" and tok.text == "(":
            self.next()
            inner = self.parse_expression()
            self.expect_op(")")
            return inner
        if tok.kind == "ident":
            return self._identifier()
        raise self.error("expected a number, identifier or '('")

    def _identifier(self) -> Expr:
        tok = self.next()
        name = tok.text
        ctx = self.ctx
        if name == "D" and self.at_op("("):
            if not ctx.allow_deriv:
                raise self.error("derivative operator not allowed here", tok)
            return self._deriv_call(tok)
        if ctx.allow_funcs and name in sx.FUNC_KINDS and self.at_op("("):
            self.next()
            arg = self.parse_expression()
            self.expect_op(")")
            return sx.func(name, arg)
        if ctx.allow_funcs and name == "sqrt" and self.at_op("("):
            self.next()
            arg = self.parse_expression()
            self.expect_op(")")
            return self._sqrt_of(arg, tok)
        if "_" in name:
            return self._subscripted(tok)
        if name in ctx.functions or name in ctx.parameters or name in ctx.symbols:
            return sx.sym(name)
        if name in INDEP_VARS:
            raise self.error(
                f"independent variable {name!r} cannot appear directly in an equation", tok)
        raise self.error(f"undeclared identifier {name!r}", tok)

    def _sqrt_of(self, arg: Expr, tok: _Token) -> Expr:
        k = sx.sym(self.ctx.riccati_symbol)
        if arg == k:
            return sx.sym(SQRT_POS)
        if arg == sx.neg(k):
            return sx.sym(SQRT_NEG)
        raise self.error(
            f"sqrt is supported only for {self.ctx.riccati_symbol} and "
            f"-{self.ctx.riccati_symbol}", tok)

    def _subscripted(self, tok: _Token) -> Expr:
        head, _, suffix = tok.text.partition("_")
        if head not in self.ctx.functions:
            raise self.error(f"undeclared identifier {tok.text!r}", tok)
        if not suffix or any(c not in "xt" for c in suffix):
            bad = next((c for c in suffix if c not in "xt"), suffix or "?")
            raise self.error(
                f"{bad!r} is not an independent variable in {tok.text!r}", tok)
        return sx.deriv(sx.sym(head), tuple(suffix))

    def _deriv_call(self, tok: _Token) -> Expr:
        self.expect_op("(")
        arg = self.parse_expression()
        variables: list[str] = []
        while self.at_op(","):
            self.next()
            vtok = self.peek()
            if vtok.kind != "ident":
                raise self.error("expected a differentiation variable")
            self.next()
            if vtok.text not in INDEP_VARS:
                raise self.error(
                    f"{vtok.text!r} is not an independent variable", vtok)
            variables.append(vtok.text)
        self.expect_op(")")
        if not variables:
            raise self.error("D(...) needs at least one variable", tok)
        if not (sx.free_symbols(arg) & set(self.ctx.functions)):
            raise self.error(
                "derivative argument contains no declared function", tok)
        return sx.deriv(arg, tuple(variables))


# ---------------------------------------------------------------------------
# File parser
# ---------------------------------------------------------------------------

def parse_expr(text: str, ctx: ExprContext) -> Expr:
    """Parse a standalone expression with the given name resolution."""
    parser = _Parser(_lex(text), ctx)
    parser.skip_newlines()
    out = parser.parse_expression()
    parser.skip_newlines()
    tok = parser.peek()
    if tok.kind != "eof":
        raise parser.error("trailing input after expression")
    return sx.normalize(out)


def parse_system(text: str) -> PDESystem:
    """Parse a full system file into a validated PDESystem."""
    tokens = _lex(text)
    parser = _Parser(tokens, ExprContext())
    parser.skip_newlines()

    tok = parser.peek()
    if not (tok.kind == "ident" and tok.text == "system"):
        raise parser.error("file must start with: system \"name\"")
    parser.next()
    stok = parser.peek()
    if stok.kind != "string":
        raise parser.error("expected the system name in double quotes")
    parser.next()
    name = stok.text[1:-1]

    params: list[str] = []
    functions: list[tuple[str, tuple[str, str]]] = []
    equations: list[Expr] = []
    eq_positions: list[_Token] = []

    def declare(name: str, tok: _Token) -> None:
        taken = set(params) | {f for f, _ in functions} | set(INDEP_VARS)
        if name in taken:
            raise ParseError(f"{name!r} is already declared", tok.line, tok.column)
        if name in ("D", "sqrt") or name in sx.FUNC_KINDS:
            raise ParseError(f"{name!r} is a reserved name", tok.line, tok.column)

    while True:
        parser.skip_newlines()
        tok = parser.peek()
        if tok.kind == "eof":
            break
        if tok.kind != "ident":
            raise parser.error("expected 'params', 'functions' or 'eq:'")
        if tok.text == "params":
            parser.next()
            while True:
                itok = parser.peek()
                if itok.kind != "ident":
                    raise parser.error("expected a parameter name")
                parser.next()
                declare(itok.text, itok)
                params.append(itok.text)
                if parser.at_op(","):
                    parser.next()
                    continue
                break
        elif tok.text == "functions":
            parser.next()
            while True:
                ftok = parser.peek()
                if ftok.kind != "ident":
                    raise parser.error("expected a function declaration like u(x,t)")
                parser.next()
                declare(ftok.text, ftok)
                parser.expect_op("(")
                v1 = parser.next()
                parser.expect_op(",")
                v2 = parser.next()
                parser.expect_op(")")
                if (v1.text, v2.text) != INDEP_VARS:
                    raise ParseError(
                        f"functions must be declared over (x,t), got "
                        f"({v1.text},{v2.text})", ftok.line, ftok.column)
                functions.append((ftok.text, INDEP_VARS))
                if parser.at_op(","):
                    parser.next()
                    continue
                break
        elif tok.text == "eq":
            parser.next()
            parser.expect_op(":")
            eq_positions.append(tok)
            eq_, parser.ctx = parser.ctx, ExprContext(
                functions=tuple(f for f, _ in functions),
                parameters=tuple(params))
            lhs = parser.parse_expression()
            parser.expect_op("=")
            rhs = parser.parse_expression()
            parser.ctx = eq_
            equations.append(sx.sub(lhs, rhs))
        else:
            raise parser.error(f"unknown statement {tok.text!r}")
        nxt = parser.peek()
        if nxt.kind not in ("newline", "eof"):
            raise parser.error("expected end of line")

    if not functions:
        raise ParseError("no functions declared", 1, 1)
    if len(functions) > 2:
        tok = eq_positions[0] if eq_positions else tokens[0]
        raise ParseError("at most two coupled functions are supported",
                         tok.line, tok.column)
    if len(equations) != len(functions):
        raise ParseError(
            f"{len(functions)} function(s) need {len(functions)} equation(s), "
            f"got {len(equations)}", 1, 1)
    for eq, tok in zip(equations, eq_positions):
        _validate_equation(eq, tok)
    return PDESystem(
        name=name,
        functions=tuple(functions),
        parameters=tuple(params),
        equations=tuple(sx.expand(e) for e in equations),
    )


def _validate_equation(e: Expr, tok: _Token) -> None:
    def walk(e: Expr) -> None:
        if isinstance(e, Deriv):
            if not e.wrt:
                raise ParseError("empty derivative", tok.line, tok.column)
            walk(e.arg)
        elif isinstance(e, Sum):
            for t in e.terms:
                walk(t)
        elif isinstance(e, Product):
            for f in e.factors:
                walk(f)
        elif isinstance(e, Power):
            walk(e.base)
    walk(e)


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------

_GREEK = {"eta": r"\eta", "lambda": r"\lambda", "xi": r"\xi", "phi": r"\varphi",
          "mu": r"\mu", "sigma": r"\sigma"}

_SQRT_DSL = {SQRT_POS: "sqrt(k)", SQRT_NEG: "sqrt(-k)"}
_SQRT_LATEX = {SQRT_POS: r"\sqrt{k}", SQRT_NEG: r"\sqrt{-k}"}


def render_expr(e: Expr, format: str = "dsl") -> str:
    """Render an expression as DSL text or a LaTeX math fragment.

    DSL output round-trips: parsing it yields the same canonical tree.
    """
    if format == "dsl":
        return _render_dsl(sx.normalize(e))
    if format == "latex":
        return _render_latex(sx.normalize(e))
    raise ValueError(f"unknown format {format!r}")


def _total_degree(e: Expr) -> int:
    if isinstance(e, Rational):
        return 0
    if isinstance(e, (Symbol, Func, Deriv)):
        return 1
    if isinstance(e, Sum):
        return max(_total_degree(t) for t in e.terms)
    if isinstance(e, Product):
        return sum(_total_degree(f) for f in e.factors)
    if isinstance(e, Power):
        return max(e.exponent, 0) * _total_degree(e.base)
    return 0


def _display_terms(e: Sum) -> list[Expr]:
    # Simple monomials first, constants last; purely cosmetic.
    def key(t: Expr):
        _, mon = sx.split_coeff(t)
        if mon is None:
            return (1, 0, 0, ())
        nfactors = len(sx.product_factors(mon))
        return (0, nfactors, -_total_degree(mon), mon.key())
    return sorted(e.terms, key=key)


def _is_ode_deriv(e: Deriv) -> bool:
    return isinstance(e.arg, Symbol) and all(v == "xi" for v in e.wrt)


def _render_dsl(e: Expr, prec: int = 0) -> str:
    # precedence levels: 0 sum, 1 product, 2 factor, 3 power base/denominator
    if isinstance(e, Rational):
        v = e.value
        return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    if isinstance(e, Symbol):
        return _SQRT_DSL.get(e.name, e.name)
    if isinstance(e, Func):
        return f"{e.kind}({_render_dsl(e.arg)})"
    if isinstance(e, Deriv):
        if _is_ode_deriv(e):
            return e.arg.name + "'" * len(e.wrt)
        return f"D({_render_dsl(e.arg)}, {', '.join(e.wrt)})"
    if isinstance(e, Power):
        if e.exponent < 0:
            return f"1/{_render_dsl(sx.pow_(e.base, -e.exponent), 3)}"
        base = _render_dsl(e.base, 0)
        if isinstance(e.base, (Sum, Product)):
            base = f"({base})"
        return f"{base}^{e.exponent}"
    if isinstance(e, Product):
        c, mon = sx.split_coeff(e)
        if c < 0:
            body = f"-{_render_dsl(sx.neg(e), 1)}"
            return f"({body})" if prec > 0 else body
        num, den = [], []
        for f in sx.product_factors(mon) if mon is not None else ():
            if isinstance(f, Power) and f.exponent < 0:
                den.append(sx.pow_(f.base, -f.exponent))
            else:
                num.append(f)
        parts = []
        if c != 1 or not num:
            parts.append(str(c.numerator) if c.denominator == 1 else
                         f"{c.numerator}/{c.denominator}")
        parts.extend(f"({_render_dsl(f)})" if isinstance(f, Sum) else _render_dsl(f, 2)
                     for f in num)
        body = "*".join(parts)
        for f in den:
            fbody = _render_dsl(f, 0)
            if isinstance(f, (Sum, Product)):
                fbody = f"({fbody})"
            body = f"{body}/{fbody}"
        return body
    if isinstance(e, Sum):
        out = ""
        for t in _display_terms(e):
            c, _ = sx.split_coeff(t)
            piece = _render_dsl(t if c >= 0 else sx.neg(t), 1)
            if not out:
                out = piece if c >= 0 else f"-{piece}"
            else:
                out += f" + {piece}" if c >= 0 else f" - {piece}"
        return f"({out})" if prec > 0 else out
    raise sx.MalformedExpressionError(f"cannot render {type(e).__name__}")


def _latex_symbol(name: str) -> str:
    if name in _SQRT_LATEX:
        return _SQRT_LATEX[name]
    m = re.fullmatch(r"([A-Za-z]+)(\d+)", name)
    if m:
        head = _GREEK.get(m.group(1), m.group(1))
        return f"{head}_{{{m.group(2)}}}"
    return _GREEK.get(name, name)


def _render_latex(e: Expr, prec: int = 0) -> str:
    if isinstance(e, Rational):
        v = e.value
        if v.denominator == 1:
            body = str(v.numerator)
            return f"\\left({body}\\right)" if v < 0 and prec >= 2 else body
        body = f"\\frac{{{abs(v.numerator)}}}{{{v.denominator}}}"
        if v < 0:
            body = f"-{body}"
            return f"\\left({body}\\right)" if prec >= 2 else body
        return body
    if isinstance(e, Symbol):
        return _latex_symbol(e.name)
    if isinstance(e, Func):
        return f"\\{e.kind}\\left({_render_latex(e.arg)}\\right)"
    if isinstance(e, Deriv):
        var = " \\partial ".join(e.wrt)
        return (f"\\frac{{\\partial^{{{len(e.wrt)}}}}}{{\\partial {var}}}"
                f"\\left({_render_latex(e.arg)}\\right)")
    if isinstance(e, Power):
        if e.exponent < 0:
            return (f"\\frac{{1}}{{{_render_latex(sx.pow_(e.base, -e.exponent))}}}")
        base = _render_latex(e.base, 3)
        if isinstance(e.base, Func):
            # tanh^2(x) display style
            return f"\\{e.base.kind}^{{{e.exponent}}}\\left({_render_latex(e.base.arg)}\\right)"
        return f"{base}^{{{e.exponent}}}"
    if isinstance(e, Product):
        num, den = [], []
        coeff = Fraction(1)
        for f in e.factors:
            if isinstance(f, Rational):
                coeff = f.value
            elif isinstance(f, Power) and f.exponent < 0:
                den.append(sx.pow_(f.base, -f.exponent))
            else:
                num.append(f)
        parts = []
        sign = "-" if coeff < 0 else ""
        acoeff = abs(coeff)
        if den:
            nbody = " ".join(_render_latex(f, 2) for f in num) or "1"
            if acoeff.numerator != 1:
                nbody = f"{acoeff.numerator} {nbody}"
            dbody = " ".join(_render_latex(f, 2) for f in den)
            if acoeff.denominator != 1:
                dbody = f"{acoeff.denominator} {dbody}"
            body = f"{sign}\\frac{{{nbody}}}{{{dbody}}}"
        else:
            if acoeff != 1:
                parts.append(_render_latex(Rational(acoeff)))
            parts.extend(_render_latex(f, 2) for f in num)
            body = sign + " ".join(parts)
        return f"\\left({body}\\right)" if prec >= 2 and (sign or den) else body
    if isinstance(e, Sum):
        out = ""
        for t in _display_terms(e):
            c, _ = sx.split_coeff(t)
            piece = _render_latex(t if c >= 0 else sx.neg(t), 1)
            if not out:
                out = piece if c >= 0 else f"-{piece}"
            else:
                out += f" + {piece}" if c >= 0 else f" - {piece}"
        return f"\\left({out}\\right)" if prec > 0 else out
    raise sx.MalformedExpressionError(f"cannot render {type(e).__name__}")
