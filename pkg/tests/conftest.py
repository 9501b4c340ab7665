import random
from fractions import Fraction

import pytest

from twsolve import symexpr as sx


@pytest.fixture(scope="session")
def mkdv_source():
    from twsolve.pipeline import builtin_source
    return builtin_source()


def random_polynomial(rnd: random.Random, symbols, depth=4):
    """Random polynomial-fragment expression over the given symbols."""
    r = rnd.random()
    if depth <= 0 or r < 0.3:
        if rnd.random() < 0.5:
            return sx.sym(rnd.choice(symbols))
        return sx.rat(rnd.randint(-6, 6), rnd.randint(1, 4))
    if r < 0.6:
        return sx.add(*[random_polynomial(rnd, symbols, depth - 1)
                        for _ in range(rnd.randint(2, 3))])
    if r < 0.9:
        return sx.mul(*[random_polynomial(rnd, symbols, depth - 1)
                        for _ in range(rnd.randint(2, 3))])
    return sx.pow_(random_polynomial(rnd, symbols, depth - 1), rnd.randint(1, 3))


def random_smooth(rnd: random.Random, symbols, depth=3):
    """Random smooth expression that may also contain tanh/tan nodes."""
    r = rnd.random()
    if depth <= 0 or r < 0.25:
        if rnd.random() < 0.6:
            return sx.sym(rnd.choice(symbols))
        return sx.rat(rnd.randint(-4, 4), rnd.randint(1, 3))
    if r < 0.5:
        return sx.add(*[random_smooth(rnd, symbols, depth - 1) for _ in range(2)])
    if r < 0.75:
        return sx.mul(*[random_smooth(rnd, symbols, depth - 1) for _ in range(2)])
    if r < 0.88:
        return sx.pow_(random_smooth(rnd, symbols, depth - 1), rnd.randint(1, 2))
    kind = rnd.choice(["tanh", "tan"])
    return sx.func(kind, random_smooth(rnd, symbols, depth - 1))


def exact_eval(e, bindings):
    """Evaluate with exact rational arithmetic via substitution."""
    out = sx.substitute(e, {sx.sym(n): sx.rat(v) for n, v in bindings.items()})
    out = sx.expand(out)
    assert isinstance(out, sx.Rational), f"not fully bound: {out!r}"
    return out.value


def random_rationals(rnd: random.Random, names):
    return {n: Fraction(rnd.randint(-9, 9), rnd.randint(1, 7)) for n in names}
