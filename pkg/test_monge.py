import math

import numpy as np
import pytest

from eikograph.core.dirichlet import DirichletProblem, solve_lax
from eikograph.core.graph import WeightField
from eikograph.core.monge import (
    comparison_check, estimate_slope, ball_search, slope_d, subslope_f, superslope_f, verify_monge,
    vertex_field_values, weak_solution_check
)
from eikograph.core.utils import EmptyNeighborhood

RADII = [0.1, 0.05, 0.025]


def test_lax_solution_passes_reduced_check(loss_problem, quad):
    solution = solve_lax(loss_problem, quad)
    report = verify_monge(solution, loss_problem, radii=RADII, quad=quad)
    assert report.passed
    assert report.semicontinuity_ok
    assert report.check_for(100) is not None
    assert report.check_for(0) is None


def test_plain_check_skips_the_whole_boundary(loss_problem, quad):
    solution = solve_lax(loss_problem, quad)
    report = verify_monge(solution, loss_problem, radii=RADII, quad=quad, reduced=False)
    assert report.checked == 99


def test_shifted_candidate_fails_only_where_data_are_missed(loss_problem, quad):
    x = loss_problem.graph.coords[:, 0]
    report = verify_monge(x + 1.0, loss_problem, radii=RADII, quad=quad)
    assert [c.vertex for c in report.failures] == [0]
    assert report.check_for(100) is None


def test_perturbed_vertex_fails(loss_problem, quad):
    values = solve_lax(loss_problem, quad).u.copy()
    values[50] += 0.005
    report = verify_monge(values, loss_problem, sample=[49, 50, 51], radii=RADII, quad=quad)
    assert not report.check_for(50).passed
    assert report.check_for(49).passed is False or report.check_for(51).passed is False


def test_sampling_is_deterministic(loss_problem, quad):
    solution = solve_lax(loss_problem, quad)
    first = verify_monge(solution, loss_problem, sample=10, radii=RADII, quad=quad, seed=3)
    second = verify_monge(solution, loss_problem, sample=10, radii=RADII, quad=quad, seed=3)
    assert first.checked == 10
    assert [c.vertex for c in first.checks] == [c.vertex for c in second.checks]


def test_slopes_are_invariant_under_scaling(unit_interval, quad):
    f = WeightField.constant(1.0).scaled(3.0)
    problem = DirichletProblem(unit_interval, f, {0: 0.0})
    u = solve_lax(problem, quad).u
    radii = [0.3, 0.15, 0.06]
    assert subslope_f(u, unit_interval, f, 50, radii, quad).extrapolated == pytest.approx(1.0)
    assert superslope_f(u, unit_interval, f, 50, radii, quad).extrapolated == pytest.approx(1.0)
    assert slope_d(u, unit_interval, 50, [0.1, 0.05, 0.02]).extrapolated == pytest.approx(3.0)


def test_strict_slope_raises_on_empty_ball(unit_interval, quad):
    f = WeightField.constant(1.0)
    u = unit_interval.coords[:, 0]
    with pytest.raises(EmptyNeighborhood) as e:
        subslope_f(u, unit_interval, f, 50, [0.05, 0.001], quad)
    assert e.value.vertex == 50
    relaxed = subslope_f(u, unit_interval, f, 50, [0.05, 0.001], quad, strict=False)
    assert math.isnan(relaxed.values[-1])
    assert relaxed.extrapolated == pytest.approx(1.0)


def test_extrapolation_waits_for_adjacent_vertices(unit_square):
    u = unit_square.coords[:, 0] + unit_square.coords[:, 1]
    x = unit_square.nearest_vertex((0.5, 0.5))
    neighbourhood = ball_search(unit_square, unit_square.lengths)
    radii = [0.2, 0.1 * (1 + 1e-9)]
    blind = estimate_slope(u, x, neighbourhood, radii, "full_d", strict=False)
    assert blind.extrapolated == pytest.approx(1.0)
    adjacent = [y for y, _ in unit_square.adjacency[x]]
    seeing = estimate_slope(u, x, neighbourhood, radii, "full_d", strict=False, adjacent=adjacent)
    assert seeing.extrapolated == pytest.approx(math.sqrt(2.0))


def test_unknown_mode(unit_interval):
    with pytest.raises(ValueError):
        estimate_slope(unit_interval.coords[:, 0], 50, ball_search(unit_interval, unit_interval.lengths),
                       RADII, "sideways")


def test_comparison_check():
    u = np.array([0.0, 0.5, 1.0])
    assert comparison_check(u, u + 0.1).passed
    reversed_order = comparison_check(u + 0.1, u)
    assert reversed_order.applicable and not reversed_order.passed
    assert reversed_order.max_violation == pytest.approx(0.1)
    unordered = comparison_check(u, u + 0.1, boundary_ordering_ok=False)
    assert not unordered.applicable and not unordered.passed
    with pytest.raises(ValueError):
        comparison_check(u, u[:2])


def test_weak_solution_check(unit_interval):
    f = WeightField.constant(1.0)
    x = unit_interval.coords[:, 0]
    assert weak_solution_check(x, unit_interval, f).passed
    assert not weak_solution_check(2.0 * x, unit_interval, f).passed
    assert not weak_solution_check(2.0 * x, unit_interval, f, mode="sub").passed
    assert weak_solution_check(0.5 * x, unit_interval, f, mode="sub").passed
    assert not weak_solution_check(0.5 * x, unit_interval, f).passed
    report = weak_solution_check(x, unit_interval, f, excluded=range(40, 61))
    assert 50 not in report.slopes
    assert report.checked == 99 - 21


def test_vertex_field_values(unit_interval):
    f = WeightField.from_expression("1 + x", alpha=1.0)
    values = vertex_field_values(unit_interval, f)
    assert values[50] == pytest.approx(1.5, abs=1e-6)
    assert values[0] == pytest.approx(1.0, abs=1e-6)


def test_report_frame(loss_problem, quad):
    report = verify_monge(solve_lax(loss_problem, quad), loss_problem, sample=[50], radii=RADII, quad=quad)
    frame = report.to_frame()
    assert list(frame.columns) == ['vertex_id', 'mode', 'radius', 'value', 'pass']
    assert len(frame) == 2 * len(RADII)
