import math

import numpy as np
import pytest

from eikograph.core.dirichlet import (
    DirichletProblem, Solution, boundary_modulus, check_compatibility, continuity_modulus,
    effective_boundary, lax_inequality_violation, solve_lax
)
from eikograph.core.graph import WeightField, build_graph
from eikograph.core.utils import EmptyBoundary, EmptyEffectiveBoundary, InvalidBoundary


def test_boundary_validation(unit_interval):
    f = WeightField.constant(1.0)
    with pytest.raises(EmptyBoundary):
        DirichletProblem(unit_interval, f, {})
    with pytest.raises(InvalidBoundary):
        DirichletProblem(unit_interval, f, {50: 0.0})
    with pytest.raises(InvalidBoundary):
        DirichletProblem(unit_interval, f, {0: math.nan})
    problem = DirichletProblem.constant(unit_interval, f, 1.5)
    assert problem.g == {0: 1.5, 100: 1.5}
    assert np.isnan(problem.g_array()[50])


def test_boundary_must_leave_an_interior():
    pair = build_graph({
        "name": "pair",
        "graph": {
            "vertices": [{"id": "a", "boundary": True}, {"id": "b", "boundary": True}],
            "edges": [{"u": "a", "v": "b", "length": 1.0}],
        },
    })
    with pytest.raises(InvalidBoundary):
        DirichletProblem(pair, WeightField.constant(1.0), {0: 0.0})
    with pytest.raises(InvalidBoundary):
        DirichletProblem.constant(pair, WeightField.constant(1.0), 0.0)


def test_lost_boundary_data(loss_problem, quad):
    solution = solve_lax(loss_problem, quad)
    x = loss_problem.graph.coords[:, 0]
    np.testing.assert_allclose(solution.u, x, atol=1e-12)
    assert solution.sigma_g == frozenset({0})
    assert solution.reduced_boundary == frozenset({100})
    assert not solution.diagnostics['compatibility_ok']
    assert solution.diagnostics['compatibility_max_excess'] == pytest.approx(1.0)
    assert solution.diagnostics['lax_inequality_max_violation'] <= 1e-12
    assert solution.diagnostics['boundary_modulus_vanishing']


def test_compatibility_lists_the_violating_pair(loss_problem, quad):
    report = check_compatibility(loss_problem, quad)
    assert not report.ok
    assert report.pairwise
    assert [(x, y) for x, y, _ in report.violations] == [(100, 0)]
    assert report.max_excess == pytest.approx(1.0)


def test_data_outside_sigma_do_not_matter(loss_problem, quad):
    before = solve_lax(loss_problem, quad)
    after = solve_lax(loss_problem.with_data({100: 5.0}), quad)
    np.testing.assert_array_equal(before.u, after.u)
    assert after.sigma_g == before.sigma_g


def test_compatible_data_are_attained(unit_interval, quad):
    problem = DirichletProblem(unit_interval, WeightField.constant(1.0), {0: 0.0, 100: 0.5})
    solution = solve_lax(problem, quad)
    assert solution.sigma_g == frozenset({0, 100})
    assert solution.diagnostics['compatibility_ok']
    assert solution.u[75] == pytest.approx(0.75)
    assert solution.u[90] == pytest.approx(0.6)
    assert solution.u[100] == pytest.approx(0.5)


def test_effective_boundary_tolerance(loss_problem, quad):
    solution = solve_lax(loss_problem, quad)
    assert effective_boundary(loss_problem, solution, tol=1.5) == frozenset({0, 100})


def test_boundary_modulus(loss_problem, quad):
    solution = solve_lax(loss_problem, quad)
    deltas = [0.01 * (1 + 1e-9), 0.1 * (1 + 1e-9)]
    modulus = boundary_modulus(loss_problem, solution, deltas)
    assert modulus[deltas[0]] == pytest.approx(0.01)
    assert modulus[deltas[1]] == pytest.approx(0.1)


def test_boundary_modulus_needs_sigma(loss_problem):
    empty = Solution(u=np.zeros(loss_problem.graph.vertex_count), sigma_g=frozenset(),
                     boundary=loss_problem.boundary)
    with pytest.raises(EmptyEffectiveBoundary):
        boundary_modulus(loss_problem, empty, [0.1])


def test_lax_inequality_flags_steep_functions(loss_problem, quad):
    x = loss_problem.graph.coords[:, 0]
    assert lax_inequality_violation(loss_problem, x, quad, sample=None) <= 1e-12
    assert lax_inequality_violation(loss_problem, 3.0 * x, quad, sample=None) == pytest.approx(2.0)


def test_continuity_modulus_of_a_linear_function(unit_interval):
    x = unit_interval.coords[:, 0]
    radii = [0.05 * (1 + 1e-9), 0.2 * (1 + 1e-9)]
    modulus = continuity_modulus(unit_interval, x, radii)
    assert modulus[radii[0]] == pytest.approx(0.05)
    assert modulus[radii[1]] == pytest.approx(0.2)


def test_solution_frame(loss_problem, quad):
    frame = solve_lax(loss_problem, quad).to_frame(loss_problem.graph)
    assert list(frame.columns) == ['vertex_id', 'x', 'y', 'u', 'in_sigma_g']
    assert len(frame) == 101
    assert frame['in_sigma_g'].sum() == 1
