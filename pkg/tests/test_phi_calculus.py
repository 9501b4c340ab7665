import math
import random
from fractions import Fraction

import pytest

from twsolve import symexpr as sx
from twsolve.pde_parser import parse_system
from twsolve.phi_calculus import (BalanceAmbiguous, BalanceFailure, PhiPoly,
                                  balance, degree_forms, make_ansatz,
                                  phi_derivative, substitute_and_collect)
from twsolve.wave_reduction import XI, reduce_to_ode

k, eta = sx.sym("k"), sx.sym("eta")
a0, a1 = sx.sym("a0"), sx.sym("a1")


def poly(d):
    return PhiPoly.from_dict({deg: sx.normalize(c) for deg, c in d.items()})


class TestPhiDerivative:
    def test_riccati_rule(self):
        assert phi_derivative(poly({1: sx.ONE})).as_dict() == {2: sx.ONE, 0: k}

    def test_constant(self):
        assert phi_derivative(poly({0: a0})).coeffs == ()

    def test_square(self):
        got = phi_derivative(poly({2: sx.ONE})).as_dict()
        assert got == {3: sx.rat(2), 1: 2 * k}

    def test_degree_law(self):
        rnd = random.Random(5)
        for _ in range(50):
            coeffs = {i: sx.rat(rnd.randint(-5, 5))
                      for i in range(rnd.randint(1, 5))}
            coeffs[rnd.randint(1, 6)] = sx.rat(rnd.randint(1, 5))
            p = poly(coeffs)
            if p.degree() >= 1:
                assert phi_derivative(p).degree() == p.degree() + 1

    def test_linearity(self):
        rnd = random.Random(6)
        for _ in range(30):
            p = poly({i: sx.rat(rnd.randint(-4, 4)) for i in range(4)})
            q = poly({i: sx.rat(rnd.randint(-4, 4)) for i in range(4)})
            lhs = phi_derivative(p.add(q))
            rhs = phi_derivative(p).add(phi_derivative(q))
            assert lhs.coeffs == rhs.coeffs

    def test_numeric_consistency_with_calculus(self):
        """With k = -1 and phi = -tanh(xi), the closure rule agrees with
        honest differentiation of the closed form."""
        rnd = random.Random(8)
        xi = sx.sym(XI)
        phi_closed = sx.neg(sx.func("tanh", xi))
        h = 1e-5
        for _ in range(20):
            p = poly({i: sx.rat(rnd.randint(-4, 4)) for i in range(4)})
            dp = phi_derivative(p)
            for _ in range(3):
                x0 = rnd.uniform(-1.5, 1.5)
                phi_at = lambda z: -math.tanh(z)
                val = lambda q, z: sx.eval_numeric(
                    q.to_expr(), {"phi": phi_at(z), "k": -1.0})
                exact = val(dp, x0)
                approx = (val(p, x0 + h) - val(p, x0 - h)) / (2 * h)
                assert abs(exact - approx) < 1e-5 * max(1.0, abs(exact))


class TestAnsatz:
    def test_paper_shape(self):
        ans = make_ansatz(1, 2)
        assert ans.u_poly().as_dict() == {0: a0, 1: a1}
        assert ans.v_poly().as_dict() == {0: sx.sym("b0"), 1: sx.sym("b1"),
                                          2: sx.sym("b2")}

    def test_symmetric(self):
        ans = make_ansatz(1, 1)
        assert ans.v_poly().as_dict() == {0: sx.sym("b0"), 1: sx.sym("b1")}

    def test_nonpositive_rejected(self):
        with pytest.raises(ValueError):
            make_ansatz(0, 1)
        with pytest.raises(ValueError):
            make_ansatz(1, 0)

    def test_single_function(self):
        ans = make_ansatz(2)
        assert ans.v_poly() is None
        assert ans.unknowns() == ("a0", "a1", "a2")
        assert ans.leading() == ("a2",)


class TestBalance:
    def test_mkdv(self, mkdv_source):
        ode = reduce_to_ode(parse_system(mkdv_source))
        assert balance(ode) == (1, 2)

    def test_single_equation_quadratic(self):
        p = parse_system('system "w"\nfunctions u(x,t)\neq: D(u,x,x) = u^2')
        assert balance(reduce_to_ode(p)) == (2, None)

    def test_unbalanceable(self):
        p = parse_system('system "w"\nfunctions u(x,t)\neq: D(u,x) = u')
        with pytest.raises(BalanceFailure) as err:
            balance(reduce_to_ode(p))
        assert err.value.forms  # carries the degree forms for diagnosis

    def test_ambiguous_advises_override(self):
        p = parse_system('system "w"\nfunctions u(x,t), v(x,t)\n'
                         'eq: u_t = v_x\neq: v_t = u_x')
        with pytest.raises(BalanceAmbiguous) as err:
            balance(reduce_to_ode(p))
        assert "--degrees" in str(err.value)

    def test_degree_forms_of_mkdv(self, mkdv_source):
        ode = reduce_to_ode(parse_system(mkdv_source))
        forms = {str(f) for f in degree_forms(ode.equations[0], ode.unknowns)}
        assert forms == {"m+3", "n+2", "3m+1", "m+n+1", "m+1"}


class TestSubstituteAndCollect:
    def test_trivial_single_derivative(self):
        from twsolve.wave_reduction import ODESystem
        ode = ODESystem(unknowns=("u",), wave_speed="lambda", parameters=(),
                        equations=(sx.deriv(sx.sym("u"), (XI,)),),
                        scales=(Fraction(1),))
        sys = substitute_and_collect(ode, make_ansatz(1))
        got = {eq.origin[1]: eq.lhs for eq in sys.equations}
        assert got == {2: a1, 0: sx.expand(a1 * k)}

    def test_mkdv_counts(self, mkdv_source):
        ode = reduce_to_ode(parse_system(mkdv_source))
        sys = substitute_and_collect(ode, make_ansatz(1, 2))
        assert len(sys.equations) == 11
        powers = {}
        for eq in sys.equations:
            powers.setdefault(eq.origin[0], []).append(eq.origin[1])
        assert sorted(powers[0]) == [0, 1, 2, 3, 4]
        assert sorted(powers[1]) == [0, 1, 2, 3, 4, 5]
        assert sys.unknowns == ("a0", "a1", "b0", "b1", "b2", "lambda")
        assert sys.parameters == ("k", "eta")
        assert sys.leading == ("a1", "b2")

    @pytest.mark.parametrize("name,assignment", [
        ("first", {"lambda": k + 3 * a0 ** 2, "a1": sx.rat(-1), "b0": eta,
                   "b1": -2 * a0, "b2": sx.ZERO}),
        ("second", {"lambda": -7 * k, "a0": sx.ZERO, "a1": sx.rat(3),
                    "b0": eta - sx.rat(10, 3) * k, "b1": sx.ZERO,
                    "b2": sx.rat(2)}),
        ("third", {"lambda": -2 * k, "a0": sx.ZERO, "a1": sx.rat(-2),
                   "b0": eta, "b1": sx.ZERO, "b2": sx.rat(2)}),
        ("fourth", {"lambda": k, "a0": sx.ZERO, "a1": sx.rat(-1),
                    "b0": eta - 2 * k, "b1": sx.ZERO, "b2": sx.rat(-2)}),
    ])
    def test_known_families_annihilate_every_equation(self, mkdv_source,
                                                      name, assignment):
        ode = reduce_to_ode(parse_system(mkdv_source))
        sys = substitute_and_collect(ode, make_ansatz(1, 2))
        binds = {sx.sym(n): e for n, e in assignment.items()}
        for eq in sys.equations:
            residual = sx.expand(sx.substitute(eq.lhs, binds))
            assert residual == sx.ZERO, (name, eq.origin)

    def test_parameter_name_collisions_rejected(self):
        src = ('system "s"\nparams a1\nfunctions u(x,t)\n'
               'eq: u_t - 6*a1*u^2*u_x + u_xxx = 0')
        ode = reduce_to_ode(parse_system(src))
        with pytest.raises(ValueError, match="collide"):
            substitute_and_collect(ode, make_ansatz(1))

    def test_reserved_names_rejected(self):
        src = ('system "s"\nparams k\nfunctions u(x,t)\n'
               'eq: u_t - 6*k*u^2*u_x + u_xxx = 0')
        ode = reduce_to_ode(parse_system(src))
        with pytest.raises(ValueError, match="reserved"):
            substitute_and_collect(ode, make_ansatz(1))

    def test_collection_soundness_against_closed_form(self, mkdv_source):
        """Reassembling the collected polynomial agrees numerically with
        substituting the tanh realization of the ansatz into the ODEs."""
        pde = parse_system(mkdv_source)
        ode = reduce_to_ode(pde)
        ansatz = make_ansatz(1, 2)
        sys = substitute_and_collect(ode, ansatz)
        rnd = random.Random(17)
        xi = sx.sym(XI)
        phi_closed = sx.neg(sx.func("tanh", xi))  # k = -1 realization

        closed = {}
        for name, p in (("u", ansatz.u_poly()), ("v", ansatz.v_poly())):
            expr = sx.substitute(p.to_expr(), {sx.sym("phi"): phi_closed})
            closed[sx.sym(name)] = expr
            cur = expr
            for order in range(1, 4):
                cur = sx.differentiate(cur, XI)
                closed[sx.deriv(sx.sym(name), (XI,) * order)] = cur
        direct = [sx.substitute(eq, closed) for eq in ode.equations]

        reassembled = {}
        for eq in sys.equations:
            idx, power = eq.origin
            reassembled.setdefault(idx, []).append(
                sx.mul(eq.lhs, sx.pow_(sx.sym("phi"), power)))
        collected = {idx: sx.add(*parts) for idx, parts in reassembled.items()}

        for _ in range(5):
            bind = {n: rnd.uniform(-1.5, 1.5)
                    for n in ("a0", "a1", "b0", "b1", "b2", "lambda", "eta")}
            bind["k"] = -1.0
            x0 = rnd.uniform(-1.2, 1.2)
            phi0 = -math.tanh(x0)
            for idx in (0, 1):
                via_closed = sx.eval_numeric(direct[idx], {**bind, XI: x0})
                via_poly = sx.eval_numeric(collected[idx],
                                           {**bind, "phi": phi0})
                assert abs(via_closed - via_poly) < 1e-8 * max(
                    1.0, abs(via_closed))
