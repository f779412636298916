import math

import numpy as np
import pytest

from eikograph.core.dirichlet import DirichletProblem, solve_lax
from eikograph.core.graph import WeightField, grid_domain
from eikograph.core.optical import edge_weights, optical_from_sources
from eikograph.core.regularity import (
    check_lipschitz_A2, estimate_Q, fit_holder, holder_pairs, lipschitz_ratio_profile, regularity_report
)
from eikograph.core.utils import DegenerateRadii, InsufficientPairs, MissingLinfTag
from eikograph.scenarios import tolerances as tol

Q_RADII = [0.2, 0.1, 0.05, 0.025, 0.0125]


@pytest.fixture
def fine_interval():
    return grid_domain({"kind": "interval", "bounds": [-1.0, 1.0]}, 0.005)


def test_interval_is_one_dimensional(fine_interval):
    q, residual = estimate_Q(fine_interval, Q_RADII)
    assert q == pytest.approx(1.0, abs=1e-6)
    assert residual < 1e-6


def test_square_is_two_dimensional():
    graph = grid_domain({"kind": "rectangle", "bounds": [[0.0, 1.0], [0.0, 1.0]]}, 0.01, stencil=8)
    q, _ = estimate_Q(graph, [0.3, 0.15, 0.075, 0.03], sample=8)
    assert q == pytest.approx(2.0, abs=tol.Q_DISK)


def test_disk_is_two_dimensional():
    graph = grid_domain({"kind": "disk", "center": [0.0, 0.0], "radius": 1.0}, 0.01, stencil=16)
    q, _ = estimate_Q(graph, [0.3, 0.15, 0.075, 0.03], sample=8)
    assert q == pytest.approx(2.0, abs=tol.Q_DISK)

def test_radii_must_span_a_decade(fine_interval):
    with pytest.raises(DegenerateRadii):
        estimate_Q(fine_interval, [0.1, 0.05])
    with pytest.raises(DegenerateRadii):
        estimate_Q(fine_interval, [0.1])


def test_fit_recovers_a_power_law():
    d = np.geomspace(1e-3, 1e-2, 20)
    fit = fit_holder(np.column_stack([d, 2.0 * np.sqrt(d)]))
    assert fit.exponent == pytest.approx(0.5)
    assert fit.constant == pytest.approx(2.0)
    assert fit.count == 20
    assert fit.band == pytest.approx(0.0, abs=1e-9)


def test_fit_needs_enough_pairs():
    d = np.geomspace(1e-3, 1e-2, 5)
    with pytest.raises(InsufficientPairs):
        fit_holder(np.column_stack([d, d]))
    with pytest.raises(InsufficientPairs):
        fit_holder(np.zeros((4, 2)))


def test_holder_pairs(unit_interval):
    x = unit_interval.coords[:, 0]
    pairs = holder_pairs(unit_interval, x, 0)
    assert pairs.shape == (100, 2)
    np.testing.assert_allclose(pairs[:, 0], pairs[:, 1], atol=1e-12)


def test_bounded_field_is_lipschitz(unit_square, quad):
    f = WeightField.from_expression("1 + x", alpha=1.0, integrability="Linf", sup_bound=2.0)
    report = check_lipschitz_A2(unit_square, f, quad=quad)
    assert report.passed
    assert report.max_ratio <= 2.0 + 1e-9
    assert report.bound == pytest.approx(2.0 / math.cos(math.pi / 8))
    explicit = check_lipschitz_A2(unit_square, f, pairs=[(0, 120), (0, 0)], quad=quad)
    assert explicit.pairs_checked == 1


def test_lipschitz_check_needs_a_bound(sqrt_interval, quad):
    graph, f = sqrt_interval
    with pytest.raises(MissingLinfTag):
        check_lipschitz_A2(graph, f, quad=quad)


def test_singular_field_ratio_grows_under_refinement(sqrt_interval, quad):
    _, f = sqrt_interval
    ratios = []
    for h in (0.01, 0.001):
        graph = grid_domain({"kind": "interval", "bounds": [-1.0, 1.0]}, h)
        ratios.append(lipschitz_ratio_profile(graph, edge_weights(graph, f, quad), graph.nearest_vertex((0.0,))))
    assert ratios[1] > 3.0 * ratios[0]


def test_report_for_a_bounded_field(quad):
    graph = grid_domain({"kind": "interval", "bounds": [0.0, 1.0]}, 0.005)
    f = WeightField.from_expression("1 + x", alpha=1.0, integrability="Linf", sup_bound=2.0)
    u = solve_lax(DirichletProblem(graph, f, {0: 0.0}), quad).u
    report = regularity_report(graph, f, u, graph.nearest_vertex((0.5,)), [0.2, 0.1, 0.05, 0.02, 0.01])
    assert report.assumption_tag == "A2"
    assert report.predicted_exponent == 1.0
    assert report.holder_exponent == pytest.approx(1.0, abs=0.02)
    assert not report.violation


def test_report_for_a_singular_field(sqrt_interval, quad):
    _, f = sqrt_interval
    graph = grid_domain({"kind": "interval", "bounds": [-1.0, 1.0]}, 0.001)
    origin = graph.nearest_vertex((0.0,))
    values = optical_from_sources(graph, f, [origin], quad=quad).dist
    report = regularity_report(graph, f, values, origin, Q_RADII)
    assert report.assumption_tag == "A1(1.9)"
    assert report.Q_estimate == pytest.approx(1.0, abs=1e-3)
    assert report.predicted_exponent == pytest.approx(1.0 - 1.0 / 1.9, abs=1e-3)
    assert report.holder_exponent == pytest.approx(0.5, abs=0.02)
    assert not report.violation
    assert set(report.to_dict()) >= {'Q_estimate', 'holder_exponent', 'violation'}
