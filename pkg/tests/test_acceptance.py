"""Acceptance gate: one test per criterion, one printed verdict line each.

Criteria 4 and 6 are implemented exactly as stated.  Two of their
clauses fail against this implementation and the failures are genuine
properties of the inputs, reproduced by the numeric residual oracle at
run time (see the catalog corrections and the solver's complete search
on the single-equation input); the assertions are kept strict rather
than weakened to match.
"""
import json
import math
import random
import time
from fractions import Fraction

import pytest

from twsolve import symexpr as sx
from twsolve.algsolve import check_assignment, solve_system
from twsolve.pde_parser import ExprContext, parse_expr, parse_system, render_expr
from twsolve.phi_calculus import (balance, make_ansatz, phi_derivative,
                                  PhiPoly, substitute_and_collect)
from twsolve.pipeline import PipelineConfig, builtin_source, run_solve
from twsolve.solutions import BranchKind, assemble_family, render_families
from twsolve.verify import NumericConfig, catalog_check, verify_numeric
from twsolve.wave_reduction import XI, reduce_to_ode

from conftest import random_polynomial, random_rationals

k, eta, a0 = sx.sym("k"), sx.sym("eta"), sx.sym("a0")
u, v, lam = sx.sym("u"), sx.sym("v"), sx.sym("lambda")


def d(f, n):
    return sx.deriv(f, (XI,) * n)


def verdict(num, ok, detail):
    status = "PASS" if ok else "FAIL"
    print(f"ACCEPTANCE {num} [{status}] {detail}")
    return ok


@pytest.fixture(scope="module")
def mkdv_pde():
    return parse_system(builtin_source())


@pytest.fixture(scope="module")
def mkdv_solved(mkdv_pde):
    ode = reduce_to_ode(mkdv_pde)
    ansatz = make_ansatz(1, 2)
    algsys = substitute_and_collect(ode, ansatz)
    started = time.time()
    outcome = solve_system(algsys)
    return ode, ansatz, algsys, outcome, time.time() - started


def test_criterion_1_reduction_golden(mkdv_pde):
    started = time.time()
    ode = reduce_to_ode(mkdv_pde)
    elapsed = time.time() - started
    eq1 = sx.expand(d(u, 3) - 2 * lam * d(u, 1) - 6 * eta * d(u, 1)
                    - 6 * u ** 2 * d(u, 1) + 3 * d(v, 2)
                    + 6 * d(u, 1) * v + 6 * u * d(v, 1))
    eq2 = sx.expand(d(v, 3) + lam * d(v, 1) - 3 * eta * d(v, 1)
                    - 3 * u ** 2 * d(v, 1) + 3 * v * d(v, 1)
                    + 3 * d(u, 1) * d(v, 1))
    structural = ode.equations == (eq1, eq2)
    scales_ok = ode.scales[0] == Fraction(-2) and ode.scales[1] != 0
    ok = structural and scales_ok and elapsed < 1.0
    assert verdict(1, ok, f"reduction golden: structural={structural} "
                          f"scales={tuple(map(str, ode.scales))} "
                          f"runtime={elapsed:.3f}s")


def test_criterion_2_balance_golden(mkdv_pde):
    started = time.time()
    got = balance(reduce_to_ode(mkdv_pde))
    elapsed = time.time() - started
    ok = got == (1, 2) and elapsed < 1.0
    assert verdict(2, ok, f"balance golden: got {got} runtime={elapsed:.3f}s")


def test_criterion_3_family_recovery(mkdv_solved):
    _, _, algsys, outcome, elapsed = mkdv_solved
    assignments = [b.assignment_map() for b in outcome.branches]

    first = {"a1": sx.rat(-1), "b0": eta, "b1": -2 * a0, "b2": sx.ZERO,
             "lambda": sx.expand(k + 3 * a0 ** 2)}
    third = {"a0": sx.ZERO, "a1": sx.rat(-2), "b0": eta, "b1": sx.ZERO,
             "b2": sx.rat(2), "lambda": -2 * k}
    fourth = {"a0": sx.ZERO, "a1": sx.rat(-1), "b0": sx.expand(eta - 2 * k),
              "b1": sx.ZERO, "b2": sx.rat(-2), "lambda": k}
    families_found = all(f in assignments for f in (first, third, fourth))

    seven = [b.assignment_map() for b in outcome.branches
             if b.assignment_map().get("lambda") == -7 * k]
    seven_ok = any(b.get("b2") == sx.rat(2) and abs(b["a1"].value) == 3
                   for b in seven)

    soundness = all(check_assignment(algsys, b) for b in outcome.branches)
    ok = families_found and seven_ok and soundness and elapsed < 60.0
    assert verdict(3, ok, f"family recovery: first/third/fourth={families_found} "
                          f"lambda=-7k branch={seven_ok} soundness={soundness} "
                          f"runtime={elapsed:.2f}s")


def test_criterion_4_sixteen_solution_regression(mkdv_pde):
    summary = catalog_check(mkdv_pde, NumericConfig(tol=1e-8))
    for row in summary.rows:
        extra = f" via {row.correction}" if row.correction else ""
        print(f"    entry {row.id:>2} {row.kind:<5} {row.status}{extra}")
    printed = summary.passed_as_printed
    accounted = summary.all_accounted
    clause_a = printed >= 12
    clause_b = accounted
    verdict(4, clause_a and clause_b,
            f"sixteen-solution regression: {printed}/16 as printed "
            f"(criterion needs >= 12), all accounted={accounted}")
    assert clause_b, "some entry fails both its printed and corrected readings"
    assert clause_a, (
        f"only {printed}/16 printed entries verify; the run adjudicates the "
        "remaining seven as misprints (cot-sign x4, leading-sign x2, "
        "argument x1), so the >= 12 clause is unattainable for this text")


def test_criterion_5_k_zero_rational_branch(mkdv_pde, mkdv_solved):
    _, ansatz, _, outcome, _ = mkdv_solved
    first = [b for b in outcome.branches
             if b.assignment_map().get("b1") == -2 * a0]
    assert first, "first family branch missing"
    family = assemble_family(first[0], BranchKind.RATIONAL, ansatz)
    x, t = sx.sym("x"), sx.sym("t")
    want_u = sx.normalize(a0 + (x + 3 * a0 ** 2 * t) ** -1)
    want_v = sx.normalize(eta + 2 * a0 * (x + 3 * a0 ** 2 * t) ** -1)
    shapes = family.u_closed == want_u and family.v_closed == want_v
    report = verify_numeric(family, mkdv_pde,
                            NumericConfig(params={"eta": 1 / 3, "a0": 0.4}))
    ok = shapes and report.numeric_max_residual < 1e-8
    assert verdict(5, ok, f"k=0 rational branch: shapes={shapes} "
                          f"max_residual={report.numeric_max_residual:.3e}")


def test_criterion_6_single_equation_smoke():
    source = ('system "mkdv_single"\nfunctions u(x,t)\n'
              'eq: u_t + 6*u^2*u_x + u_xxx = 0\n')
    pde = parse_system(source)
    ode = reduce_to_ode(pde)
    m, n = balance(ode)
    balance_ok = (m, n) == (1, None)

    ansatz = make_ansatz(1)
    outcome = solve_system(substitute_and_collect(ode, ansatz))
    nondegenerate = [b for b in outcome.branches if not b.degenerate]
    tanh_verified = False
    for branch in nondegenerate:
        family = assemble_family(branch, BranchKind.TANH, ansatz)
        report = verify_numeric(family, pde)
        if report.numeric_max_residual < 1e-8:
            tanh_verified = True
    ok = balance_ok and tanh_verified
    verdict(6, ok, f"single-equation smoke: balance m={m} "
                   f"nondegenerate={len(nondegenerate)} "
                   f"(search complete={outcome.complete}) "
                   f"tanh verified={tanh_verified}")
    assert balance_ok
    assert tanh_verified, (
        "the stated input admits no nondegenerate branch: the top phi-power "
        "coefficient forces 6*a1*(a1^2 + 1) = 0, whose only real root is "
        "a1 = 0; the solver's search is complete, so nothing was missed")


def test_criterion_7_property_suites():
    results = {}

    # differentiation vs central finite differences, 200 cases, 1e-5 rel
    rnd = random.Random(202)
    h = 1e-5
    checked = 0
    diff_ok = True
    while checked < 200:
        e = random_polynomial(rnd, ["x", "y"])
        de = sx.differentiate(e, "x")
        pt = {"x": rnd.uniform(-2, 2), "y": rnd.uniform(-2, 2)}
        try:
            exact = sx.eval_numeric(de, pt)
            plus = sx.eval_numeric(e, {**pt, "x": pt["x"] + h})
            minus = sx.eval_numeric(e, {**pt, "x": pt["x"] - h})
        except sx.EvaluationSingularError:
            continue
        approx = (plus - minus) / (2 * h)
        scale = max(1.0, abs(exact), abs(plus), abs(minus))
        diff_ok = diff_ok and abs(exact - approx) / scale < 1e-5
        checked += 1
    results["differentiation"] = diff_ok

    # parser round trip, 100 cases
    ctx = ExprContext(symbols=("x", "y", "k"), allow_deriv=False,
                      allow_funcs=True)
    rnd = random.Random(303)
    results["round_trip"] = all(
        parse_expr(render_expr(e), ctx) == sx.normalize(e)
        for e in (random_polynomial(rnd, ["x", "y", "k"]) for _ in range(100)))

    # phi derivative: degree law and numeric consistency at k = -1
    rnd = random.Random(404)
    degree_ok = True
    numeric_ok = True
    for _ in range(40):
        coeffs = {i: sx.rat(rnd.randint(-5, 5)) for i in range(3)}
        coeffs[rnd.randint(1, 5)] = sx.rat(rnd.randint(1, 5))
        p = PhiPoly.from_dict(coeffs)
        dp = phi_derivative(p)
        if p.degree() >= 1:
            degree_ok = degree_ok and dp.degree() == p.degree() + 1
        x0 = rnd.uniform(-1.2, 1.2)
        val = lambda q, z: sx.eval_numeric(q.to_expr(),
                                           {"phi": -math.tanh(z), "k": -1.0})
        approx = (val(p, x0 + 1e-5) - val(p, x0 - 1e-5)) / 2e-5
        exact = val(dp, x0)
        numeric_ok = numeric_ok and abs(exact - approx) < 1e-5 * max(1.0, abs(exact))
    results["phi_degree_law"] = degree_ok
    results["phi_numeric"] = numeric_ok

    # planted-solution recovery and soundness over 50 random systems
    from test_algsolve import TestPlantedSolutions, make_sys
    planted_ok = True
    rnd = random.Random(2024)
    helper = TestPlantedSolutions()
    for _ in range(50):
        sys_, planted = helper._random_system(rnd)
        out = solve_system(sys_)
        planted_ok = planted_ok and out.discarded_unsound == 0
        planted_ok = planted_ok and all(
            check_assignment(sys_, b) for b in out.branches)
        planted_ok = planted_ok and any(
            helper._covers(b, planted) for b in out.branches)
    results["planted_recovery"] = planted_ok

    # determinism: byte-identical reports across two runs
    config = PipelineConfig(source=builtin_source())
    r1 = run_solve(config)
    r2 = run_solve(config)
    results["determinism"] = (
        render_families(r1.report, "json") == render_families(r2.report, "json")
        and r1.exit_code == r2.exit_code == 0)

    ok = all(results.values())
    assert verdict(7, ok, "property suites: " + " ".join(
        f"{name}={'ok' if good else 'FAIL'}" for name, good in results.items()))
