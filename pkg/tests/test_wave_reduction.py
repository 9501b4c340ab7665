import random
from fractions import Fraction

import pytest

from twsolve import symexpr as sx
from twsolve.pde_parser import parse_system
from twsolve.verify import pde_residual_exprs
from twsolve.wave_reduction import (XI, ReductionError, deriv_order,
                                    reduce_equation, reduce_to_ode)

from conftest import random_polynomial

u, v = sx.sym("u"), sx.sym("v")
lam, eta = sx.sym("lambda"), sx.sym("eta")


def d(f, n):
    return sx.deriv(f, (XI,) * n)


class TestReduceToOde:
    def test_advection(self):
        p = parse_system('system "s"\nfunctions u(x,t)\neq: u_t = u_x')
        ode = reduce_to_ode(p)
        # (lambda - 1) u' = 0 up to the sign/content convention
        assert sx.expand(ode.equations[0]) in (
            sx.expand(d(u, 1) - lam * d(u, 1)),
            sx.expand(lam * d(u, 1) - d(u, 1)),
        )

    def test_mixed_partial(self):
        p = parse_system('system "s"\nfunctions u(x,t)\neq: D(u,x,t) = u_x')
        ode = reduce_to_ode(p)
        assert ode.equations[0] == sx.expand(lam * d(u, 2) - d(u, 1))

    def test_mkdv_golden(self, mkdv_source):
        """The reduced system matches the hand-derived coupled ODEs exactly,
        with raw-to-normalized scales -2 and 1."""
        ode = reduce_to_ode(parse_system(mkdv_source))
        eq1 = sx.expand(d(u, 3) - 2 * lam * d(u, 1) - 6 * eta * d(u, 1)
                        - 6 * u ** 2 * d(u, 1) + 3 * d(v, 2)
                        + 6 * d(u, 1) * v + 6 * u * d(v, 1))
        eq2 = sx.expand(d(v, 3) + lam * d(v, 1) - 3 * eta * d(v, 1)
                        - 3 * u ** 2 * d(v, 1) + 3 * v * d(v, 1)
                        + 3 * d(u, 1) * d(v, 1))
        assert ode.equations == (eq1, eq2)
        assert ode.scales == (Fraction(-2), Fraction(1))

    def test_no_xt_left(self, mkdv_source):
        ode = reduce_to_ode(parse_system(mkdv_source))
        for eq in ode.equations:
            assert not (sx.free_symbols(eq) & {"x", "t"})

    def test_wave_speed_collision(self, mkdv_source):
        with pytest.raises(ReductionError):
            reduce_to_ode(parse_system(mkdv_source), "eta")

    def test_order_cap(self):
        p = parse_system(
            'system "s"\nfunctions u(x,t)\neq: u_t = u_xxxxxxx')
        with pytest.raises(ReductionError):
            reduce_to_ode(p)

    def test_custom_wave_speed_name(self, mkdv_source):
        ode = reduce_to_ode(parse_system(mkdv_source), "c")
        assert ode.wave_speed == "c"
        assert any(sx.contains_symbol(eq, "c") for eq in ode.equations)


class TestLinearity:
    def test_reduction_is_linear(self, mkdv_source):
        pde = parse_system(mkdv_source)
        e1, e2 = pde.equations
        fn = pde.function_names
        lhs = reduce_equation(sx.add(e1, e2), fn)
        rhs = sx.add(reduce_equation(e1, fn), reduce_equation(e2, fn))
        assert sx.expand(lhs) == sx.expand(rhs)

    def test_scaling_commutes(self, mkdv_source):
        pde = parse_system(mkdv_source)
        e1 = pde.equations[0]
        fn = pde.function_names
        scaled = reduce_equation(sx.scale_expr(e1, Fraction(7, 3)), fn)
        assert sx.expand(scaled) == sx.expand(
            sx.scale_expr(reduce_equation(e1, fn), Fraction(7, 3)))


class TestNumericConsistency:
    def test_pde_and_ode_residuals_agree(self, mkdv_source):
        """A generic (non-solution) traveling wave gives the same residual
        through both routes, up to the recorded scale."""
        pde = parse_system(mkdv_source)
        ode = reduce_to_ode(pde)
        rnd = random.Random(99)
        xi = sx.sym(XI)
        for trial in range(5):
            lam0 = Fraction(rnd.randint(-3, 3), rnd.randint(1, 3))
            fu = random_polynomial(rnd, [XI], depth=3)
            fv = random_polynomial(rnd, [XI], depth=3)
            xt_wave = sx.add(sx.sym("x"), sx.mul(sx.rat(lam0), sx.sym("t")))
            closed = {
                "u": sx.substitute(fu, {xi: xt_wave}),
                "v": sx.substitute(fv, {xi: xt_wave}),
            }
            pde_res = pde_residual_exprs(pde, closed)

            derivs = {}
            for name, f in (("u", fu), ("v", fv)):
                derivs[sx.sym(name)] = f
                cur = f
                for order in range(1, 4):
                    cur = sx.differentiate(cur, XI)
                    derivs[sx.deriv(sx.sym(name), (XI,) * order)] = cur
            derivs[sx.sym("lambda")] = sx.rat(lam0)
            ode_res = [sx.substitute(eq, derivs) for eq in ode.equations]

            for _ in range(3):
                xv, tv = rnd.uniform(-2, 2), rnd.uniform(-1, 1)
                bind = {"x": xv, "t": tv, "eta": 1 / 3,
                        XI: xv + float(lam0) * tv}
                for i in range(2):
                    got_pde = sx.eval_numeric(pde_res[i], bind)
                    got_ode = sx.eval_numeric(ode_res[i], bind)
                    scale = float(ode.scales[i])
                    err = abs(got_ode - scale * got_pde)
                    tol = 1e-8 * max(1.0, abs(got_ode), abs(scale * got_pde))
                    assert err < tol, (trial, i, got_pde, got_ode)


class TestNormalization:
    def test_zero_equation_dropped(self):
        from twsolve.wave_reduction import normalize_ode
        ode = normalize_ode([sx.ZERO, d(u, 1)], unknowns=("u",),
                            wave_speed="lambda", parameters=())
        assert len(ode.equations) == 1

    def test_content_and_sign(self):
        raw = sx.rat(1, 2) * d(u, 3) - lam * d(u, 1)
        from twsolve.wave_reduction import normalize_ode
        ode = normalize_ode([raw], unknowns=("u",), wave_speed="lambda",
                            parameters=())
        assert ode.equations[0] == sx.expand(d(u, 3) - 2 * lam * d(u, 1))
        assert ode.scales[0] == Fraction(2)

    def test_deriv_order(self):
        assert deriv_order(d(u, 3) * v + d(v, 2)) == 3
        assert deriv_order(u * v) == 0
