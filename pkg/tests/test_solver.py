import numpy as np
import pytest

from oracles import enumerate_qp_2d, grid_upper_bound, random_infeasible_instance, random_instance
from scaledscenario import distributions as dists
from scaledscenario.problem import Linear, Quadratic, SampledProgram, assemble, pole_assignment
from scaledscenario.solver import (INFEASIBLE, ITERATION_LIMIT, OPTIMAL, TIMEOUT, SolverOptions,
                                   feasibility_check, solve, solve_qp, verify_certificate)


def program(G, h, objective, lower, upper):
    G = np.asarray(G, float)
    return SampledProgram(G, None, h, objective, lower, upper)


def test_symmetric_qp_example():
    rep = solve(program([[-1, -1]], [-1], Quadratic(2 * np.eye(2)), [-10, -10], [10, 10]))
    assert rep.status == OPTIMAL
    assert rep.x_hat == pytest.approx([0.5, 0.5], abs=1e-7)
    assert rep.objective_value == pytest.approx(0.5, abs=1e-7)
    assert rep.max_row_violation <= 1e-8
    assert rep.kkt_residual <= 1e-6


def test_unconstrained_inside_box():
    rep = solve(program(np.zeros((0, 1)), [], Quadratic([[2.0]]), [-10], [10]))
    assert rep.status == OPTIMAL
    assert rep.x_hat == pytest.approx([0.0], abs=1e-8)
    assert rep.objective_value == pytest.approx(0.0, abs=1e-8)


def test_contradictory_half_lines():
    prog = program([[1.0], [-1.0]], [-1.0, -1.0], Quadratic([[2.0]]), [-10], [10])
    rep = solve(prog)
    assert rep.status == INFEASIBLE
    G, h = prog.inequalities()
    assert verify_certificate(G, h, prog.lower, prog.upper, rep.certificate)


def test_box_excludes_rows():
    rep = solve(program([[-1.0]], [-11.0], Linear([1.0]), [-10], [10]))
    assert rep.status == INFEASIBLE


def test_feasibility_check_examples():
    assert feasibility_check(program([[-1, -1]], [-1], Quadratic(2 * np.eye(2)), [-10, -10], [10, 10]),
                             [0.5, 0.5]) == 0.0
    assert feasibility_check(program([[1.0]], [1.0], Linear([1.0]), [-10], [10]), [0.0]) == -1.0
    assert feasibility_check(program([[1.0]], [100.0], Linear([1.0]), [-10], [10]), [10.5]) == 0.5


def test_non_psd_objective_rejected():
    with pytest.raises(ValueError):
        solve_qp([[1.0, 0.0], [0.0, -1.0]], [0, 0], np.zeros((0, 2)), [], [-1, -1], [1, 1])


def test_iteration_limit_reports_best_iterate():
    rng = np.random.default_rng(1)
    P, q, G, h, lo, hi = random_instance(rng, rows=15)
    rep = solve_qp(P, q, G, h, lo, hi, SolverOptions(max_iters=2))
    assert rep.status == ITERATION_LIMIT
    assert rep.x_hat is not None


def test_time_limit():
    p = pole_assignment()
    prog = assemble(p, dists.sample(p.distribution, 20000, 0))
    rep = solve(prog, SolverOptions(time_limit=0.0))
    assert rep.status == TIMEOUT and rep.x_hat is None


@pytest.mark.parametrize("seed", range(50))
def test_against_enumeration_oracle(seed):
    rng = np.random.default_rng(seed)
    P, q, G, h, lo, hi = random_instance(rng, linear=seed % 4 == 0)
    ref, _ = enumerate_qp_2d(P, q, G, h, lo, hi)
    rep = solve_qp(P, q, G, h, lo, hi)
    assert rep.status == OPTIMAL
    assert rep.objective_value == pytest.approx(ref, abs=1e-3)
    assert rep.max_row_violation <= 1e-8
    assert rep.objective_value <= grid_upper_bound(P, q, G, h, lo, hi, 201) + 1e-6 * (1 + abs(ref))


@pytest.mark.parametrize("seed", range(20))
def test_infeasible_instances_certified(seed):
    rng = np.random.default_rng(1000 + seed)
    P, q, G, h, lo, hi = random_infeasible_instance(rng)
    rep = solve_qp(P, q, G, h, lo, hi)
    assert rep.status == INFEASIBLE
    assert verify_certificate(G, h, lo, hi, rep.certificate)


def test_adding_rows_never_decreases_objective():
    p = pole_assignment()
    xi = dists.sample(p.distribution, 2000, 4)
    values = []
    for N in (10, 100, 500, 2000):
        rep = solve(assemble(p, xi[:N], 1.0))
        assert rep.status == OPTIMAL
        values.append(rep.objective_value)
    assert all(b >= a - 1e-7 for a, b in zip(values, values[1:]))


def test_row_scaling_consistency():
    rng = np.random.default_rng(5)
    for _ in range(10):
        P, q, G, h, lo, hi = random_instance(rng)
        a = solve_qp(P, q, G, h, lo, hi)
        b = solve_qp(P, q, 10 * G, 10 * h, lo, hi)
        assert a.x_hat == pytest.approx(b.x_hat, abs=1e-6)


def test_scaled_objective_monotone_in_s():
    p = pole_assignment()
    xi = dists.sample(p.distribution, 800, 6)
    objs = []
    for s in (1.0, 1.05, 1.1, 1.2):
        rep = solve(assemble(p, xi, s))
        if rep.status != OPTIMAL:
            break
        objs.append(rep.objective_value)
    assert len(objs) >= 2
    assert all(b >= a - 1e-7 for a, b in zip(objs, objs[1:]))


def test_deterministic():
    p = pole_assignment()
    prog = assemble(p, dists.sample(p.distribution, 3000, 2), 1.1)
    a, b = solve(prog), solve(prog)
    assert np.array_equal(a.x_hat, b.x_hat) and a.iterations == b.iterations


def test_benchmark_solution_is_certified():
    p = pole_assignment()
    prog = assemble(p, dists.sample(p.distribution, 9992, 3), 1.0)
    rep = solve(prog)
    assert rep.status == OPTIMAL
    assert rep.max_row_violation <= 1e-8
    assert rep.kkt_residual <= 1e-6
    # enumerate over the 60 rows of least slack at the solver point, then
    # confirm the enumerated optimum satisfies every other row as well
    G, h = prog.inequalities()
    slack = (h - G @ rep.x_hat) / np.linalg.norm(G, axis=1)
    near = np.argsort(slack)[:60]
    ref, x_ref = enumerate_qp_2d(prog.objective.H, prog.objective.c, G[near], h[near],
                                 prog.lower, prog.upper)
    assert np.max(G @ x_ref - h) <= 1e-9
    assert rep.objective_value == pytest.approx(ref + prog.const, abs=1e-6)
