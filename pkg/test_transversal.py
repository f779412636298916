import math

import numpy as np
import pytest

from eikograph.core.dirichlet import DirichletProblem, solve_lax
from eikograph.core.graph import WeightField
from eikograph.core.optical import optical_from_sources
from eikograph.core.transversal import (
    NullSetMarking, maximal_optical, maximal_weak_check, optical_transversal, solve_lax_transversal,
    transversal_gap, verify_transversal_monge
)
from eikograph.core.monge import verify_monge
from eikograph.core.utils import InvalidMarking, MissingLinfTag
from eikograph.scenarios.builtins import midline_marking


@pytest.fixture
def square_problem(unit_square):
    return DirichletProblem.constant(unit_square, WeightField.constant(1.0), 0.0)


@pytest.fixture
def midline(unit_square):
    return midline_marking(unit_square)


def test_marking_validation(unit_square):
    with pytest.raises(InvalidMarking):
        NullSetMarking("bad", frozenset({10 ** 6})).validate(unit_square)
    with pytest.raises(InvalidMarking):
        NullSetMarking("bad", passable_vertices=frozenset({-1})).validate(unit_square)


def test_passable_vertex_is_not_sealed(unit_square, midline):
    gap = unit_square.nearest_vertex((0.5, 0.5))
    sealed = midline.sealed_vertices(unit_square)
    assert len(sealed) == 10
    assert gap not in sealed
    assert midline.vertices(unit_square) == sealed | {gap}
    assert np.isinf(midline.blocked_weights(unit_square.lengths)[sorted(midline.blocked_edges)]).all()


def test_empty_family_is_the_plain_solution(square_problem, quad):
    plain = solve_lax(square_problem, quad)
    empty = solve_lax_transversal(square_problem, [], quad)
    np.testing.assert_array_equal(empty.u, plain.u)
    assert empty.diagnostics['transversal_gap'] == 0.0


def test_maximal_solution_lies_above(unit_square, square_problem, midline, quad):
    plain = solve_lax(square_problem, quad)
    maximal = solve_lax_transversal(square_problem, [midline], quad)
    assert np.all(maximal.u >= plain.u - 1e-12)
    corner = unit_square.nearest_vertex((1.0, 1.0))
    assert plain.u[corner] == pytest.approx(1.0)
    # Cheapest crossing runs straight to the gap from (0, 0.5), then diagonally
    assert maximal.u[corner] == pytest.approx(0.5 + 0.5 * math.sqrt(2.0))
    assert transversal_gap(plain.u, maximal.u) >= maximal.u[corner] - 1.0 - 1e-12
    assert maximal.diagnostics['family'] == ['midline']
    assert maximal.diagnostics['infinite_vertices'] == 0


def test_per_marking_never_exceeds_pairwise(square_problem, midline, quad):
    pairwise = solve_lax_transversal(square_problem, [midline], quad)
    per_marking = solve_lax_transversal(square_problem, [midline], quad, combine="per_marking")
    assert np.all(per_marking.u <= pairwise.u + 1e-12)
    assert per_marking.diagnostics['combine'] == "per_marking"


def test_unknown_combine_mode(square_problem, midline, quad):
    with pytest.raises(ValueError):
        solve_lax_transversal(square_problem, [midline], quad, combine="average")


def test_maximal_optical_names_the_marking(unit_square, midline, quad):
    f = WeightField.constant(1.0)
    start, end = unit_square.nearest_vertex((0.0, 0.0)), unit_square.nearest_vertex((1.0, 0.0))
    value, name = maximal_optical(unit_square, f, [midline], start, end, quad)
    assert value == pytest.approx(math.sqrt(2.0))
    assert name == "midline"
    value, name = maximal_optical(unit_square, f, [], start, end, quad)
    assert value == pytest.approx(1.0)
    assert name is None


def test_passable_only_marking_changes_nothing(unit_square, quad):
    f = WeightField.constant(1.0)
    marking = NullSetMarking("point", passable_vertices=frozenset({unit_square.nearest_vertex((0.5, 0.5))}))
    blocked = optical_transversal(unit_square, f, marking, [0], quad=quad)
    plain = optical_from_sources(unit_square, f, [0], quad=quad)
    np.testing.assert_array_equal(blocked.dist, plain.dist)
    assert blocked.meta['marking'] == "point"


def test_transversal_monge_skips_sealed_vertices(unit_square, square_problem, midline, quad):
    maximal = solve_lax_transversal(square_problem, [midline], quad)
    radii = [0.2, 0.1, 0.05]
    report = verify_transversal_monge(maximal, square_problem, [midline], radii=radii, quad=quad)
    sealed = midline.sealed_vertices(unit_square)
    assert report.kind == "transversal"
    assert not any(c.vertex in sealed for c in report.checks)
    plain = solve_lax(square_problem, quad)
    empty = verify_transversal_monge(plain, square_problem, [], radii=radii, quad=quad)
    reference = verify_monge(plain, square_problem, radii=radii, quad=quad)
    assert empty.checked == reference.checked
    assert empty.pass_fraction == reference.pass_fraction


def test_maximal_weak_check_needs_a_bounded_field(unit_square, midline, quad):
    f = WeightField.from_expression("1 + x", alpha=1.0, integrability="Lp", p=3.0)
    problem = DirichletProblem.constant(unit_square, f, 0.0)
    solution = solve_lax(problem, quad)
    with pytest.raises(MissingLinfTag):
        maximal_weak_check(solution, problem, [midline])


def test_maximal_weak_check_rejects_candidates_above_the_data(square_problem, midline, quad):
    maximal = solve_lax_transversal(square_problem, [midline], quad)
    report = maximal_weak_check(maximal, square_problem, [midline], candidates={'raised': maximal.u + 1.0})
    assert report.members == {'raised': False}
    assert "boundary data" in report.rejected['raised']
    assert 'raised' not in report.dominated
