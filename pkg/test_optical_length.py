import math

import numpy as np
import pytest

from eikograph.core.graph import WeightField, grid_domain
from eikograph.core.optical import (
    check_metric_axioms, distance_matrix, edge_weights, finiteness_report, label_setting, optical_diameter,
    optical_from_sources, optical_pair, topology_modulus, truncated_solve
)
from eikograph.core.utils import BudgetExceeded, EmptySourceSet


@pytest.fixture
def stepped(path_graph):
    """f = 1, 2, 3 on the three edges of the path, so edge weights are 1, 4 and 1.5"""
    return path_graph, WeightField.per_edge({0: 1.0, 1: 2.0, 2: 3.0})


def test_distances_and_witness(stepped, quad):
    graph, f = stepped
    table = optical_from_sources(graph, f, [0], quad=quad)
    np.testing.assert_allclose(table.dist, [0.0, 1.0, 5.0, 6.5])
    witness = table.witness(graph, 3)
    assert (witness.start, witness.end) == (0, 3)
    assert [s.edge for s in witness.segments] == [0, 1, 2]
    assert table.witness(graph, 0).is_empty


def test_optical_pair(stepped, quad):
    graph, f = stepped
    value, path = optical_pair(graph, f, 0, 3, quad)
    assert value == pytest.approx(6.5)
    assert path.length == pytest.approx(3.5)
    value, path = optical_pair(graph, f, 2, 2, quad)
    assert value == 0.0
    assert path.is_empty


def test_initial_values_pick_the_cheaper_source(stepped, quad):
    graph, f = stepped
    table = optical_from_sources(graph, f, [0, 3], initial={0: 0.0, 3: 0.5}, quad=quad)
    np.testing.assert_allclose(table.dist, [0.0, 1.0, 2.0, 0.5])
    assert table.root.tolist() == [0, 0, 3, 3]
    assert table.parent[2] == 3


def test_empty_sources(stepped, quad):
    graph, f = stepped
    with pytest.raises(EmptySourceSet):
        optical_from_sources(graph, f, [], quad=quad)


def test_cutoff_leaves_far_vertices_unreached(stepped, quad):
    graph, f = stepped
    table = optical_from_sources(graph, f, [0], quad=quad, cutoff=2.0)
    assert table.dist[1] == 1.0
    assert math.isinf(table.dist[2])
    assert table.witness(graph, 2).is_empty


def test_sealed_vertices_end_but_do_not_relay(stepped, quad):
    graph, f = stepped
    weights = edge_weights(graph, f, quad)
    dist = label_setting(graph, weights, [0], sealed=frozenset({1}))[0]
    assert dist[1] == 1.0
    assert math.isinf(dist[2])
    # A sealed source still expands
    dist = label_setting(graph, weights, [1], sealed=frozenset({1}))[0]
    assert dist[2] == 4.0


def test_singular_field_matches_closed_form(sqrt_interval, quad):
    graph, f = sqrt_interval
    table = optical_from_sources(graph, f, [100], quad=quad)
    x = graph.coords[:, 0]
    assert np.max(np.abs(table.dist - 2.0 * np.sqrt(np.abs(x)))) < 5e-3


def test_truncation_converges_from_below(sqrt_interval, quad):
    graph, f = sqrt_interval
    full = optical_from_sources(graph, f, [100], quad=quad).dist
    gaps = []
    for M in (10.0, 100.0, 1000.0):
        table = truncated_solve(graph, f, M, [100], quad=quad)
        assert table.meta['truncation'] == M
        assert np.all(table.dist <= full + 1e-12)
        gaps.append(float(np.max(full - table.dist)))
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[0] == pytest.approx(0.1, rel=1e-3)


def test_metric_axioms_hold(quad):
    graph = grid_domain({"kind": "rectangle", "bounds": [[0.0, 1.0], [0.0, 1.0]]}, 0.1, stencil=8)
    f = WeightField.from_expression("1 + x", alpha=1.0)
    report = check_metric_axioms(graph, f, sample_count=100, quad=quad)
    assert report.passed
    assert report.triples_checked == 100


def test_distance_matrix_is_symmetric(stepped, quad):
    graph, f = stepped
    matrix = distance_matrix(graph, edge_weights(graph, f, quad))
    np.testing.assert_allclose(matrix, matrix.T)
    assert optical_diameter(graph, graph.lengths) == pytest.approx(3.5)


def test_topology_modulus_vanishes_for_integrable_field(sqrt_interval, quad):
    graph, f = sqrt_interval
    small, large = 0.01 * (1 + 1e-9), 0.1 * (1 + 1e-9)
    report = topology_modulus(graph, f, [small, large], quad=quad)
    assert report.exhaustive
    assert report.modulus[small] == pytest.approx(0.2, rel=1e-3)
    # The worst pair straddles the singularity symmetrically
    assert report.modulus[large] == pytest.approx(4.0 * math.sqrt(0.05), rel=1e-3)
    assert report.vanishing


def test_topology_modulus_budget(sqrt_interval, quad, monkeypatch):
    graph, f = sqrt_interval
    monkeypatch.setenv("EIKOGRAPH_ALL_PAIRS_LIMIT", "10")
    with pytest.raises(BudgetExceeded):
        topology_modulus(graph, f, [0.1], quad=quad)
    report = topology_modulus(graph, f, [0.1], quad=quad, budget=5)
    assert not report.exhaustive
    assert report.sources_scanned == 5


def test_nonintegrable_field_is_finite_on_one_side_only(quad):
    graph = grid_domain({"kind": "interval", "bounds": [-1.0, 1.0]}, 0.1)
    f = WeightField.from_points(lambda p: 1.0 / np.abs(p[:, 0]), alpha=1.0, name="1/|x|")
    report = finiteness_report(optical_from_sources(graph, f, [20], quad=quad))
    assert (report.finite, report.infinite) == (10, 11)
    assert not report.all_finite
