import math

import numpy as np
import pytest

from eikograph.core.graph import (
    Path, PathSegment, WeightField, build_graph, curve_integral, grid_domain, integrate_edges,
    overlay_segment, refine, stencil_quasiconvexity
)
from eikograph.core.graph.grid import STENCILS
from eikograph.core.utils import (
    DisconnectedGraph, EmptyBoundary, EmptyDomain, InvalidPath, NonpositiveEdgeLength, ParseError
)


def _spec(vertices, edges):
    return {"name": "t", "graph": {"vertices": vertices, "edges": edges}}


def test_explicit_graph_uses_euclidean_lengths(path_graph):
    assert path_graph.lengths.tolist() == [1.0, 2.0, 0.5]
    assert path_graph.measures.tolist() == [1.0, 2.0, 0.5]
    assert [v.label for v in path_graph.vertices] == ["a", "b", "c", "d"]
    assert path_graph.boundary_vertices == frozenset({0, 3})
    assert path_graph.total_measure == pytest.approx(3.5)


def test_explicit_length_and_measure_override_coordinates():
    graph = build_graph(_spec([{"id": 1}, {"id": 2}], [{"u": 1, "v": 2, "length": 2.5, "measure": 0.0}]))
    assert graph.lengths.tolist() == [2.5]
    assert graph.measures.tolist() == [0.0]
    assert graph.ambient_dimension == 0


def test_missing_edges_reports_location():
    with pytest.raises(ParseError) as e:
        build_graph({"graph": {"vertices": [{"id": "a"}]}})
    assert e.value.location == "graph"
    assert "edges" in str(e.value)


def test_unknown_endpoint_reports_location():
    spec = _spec([{"id": "a", "xy": [0, 0]}, {"id": "b", "xy": [1, 0]}], [{"u": "a", "v": "z"}])
    with pytest.raises(ParseError) as e:
        build_graph(spec)
    assert e.value.location == "graph.edges[0].v"


def test_duplicate_vertex_and_self_loop_are_rejected():
    with pytest.raises(ParseError):
        build_graph(_spec([{"id": "a", "xy": [0, 0]}, {"id": "a", "xy": [1, 0]}], []))
    with pytest.raises(ParseError):
        build_graph(_spec([{"id": "a", "xy": [0, 0]}], [{"u": "a", "v": "a"}]))


def test_zero_length_edge_is_rejected():
    spec = _spec([{"id": "a"}, {"id": "b"}], [{"u": "a", "v": "b", "length": 0}])
    with pytest.raises(NonpositiveEdgeLength):
        build_graph(spec)


def test_disconnected_graph_is_rejected():
    spec = _spec([{"id": "a", "xy": [0, 0]}, {"id": "b", "xy": [1, 0]}, {"id": "c", "xy": [5, 5]}],
                 [{"u": "a", "v": "b"}])
    with pytest.raises(DisconnectedGraph):
        build_graph(spec)


def test_required_boundary():
    spec = _spec([{"id": "a", "xy": [0, 0]}, {"id": "b", "xy": [1, 0]}], [{"u": "a", "v": "b"}])
    with pytest.raises(EmptyBoundary):
        build_graph(spec, require_boundary=True)


def test_refine_splits_edges_and_keeps_original_vertices(path_graph):
    fine = refine(path_graph, 4)
    assert fine.vertex_count == 4 + 3 * 3
    assert fine.edge_count == 12
    assert fine.lengths.sum() == pytest.approx(3.5)
    assert fine.measures.sum() == pytest.approx(3.5)
    np.testing.assert_array_equal(fine.coords[:4], path_graph.coords)
    assert fine.boundary_vertices == path_graph.boundary_vertices
    assert sorted(set(fine.origins.tolist())) == [0, 1, 2]
    np.testing.assert_allclose(fine.offsets[fine.origins == 1], [0.0, 0.5, 1.0, 1.5])
    assert fine.metadata["refined"] == 4


@pytest.mark.parametrize("factor", [1, 0, 2.5])
def test_refine_rejects_bad_factors(path_graph, factor):
    with pytest.raises(ValueError):
        refine(path_graph, factor)


def test_interval_grid():
    graph = grid_domain({"kind": "interval", "bounds": [0.0, 1.0]}, 0.1)
    assert graph.vertex_count == 11
    assert graph.boundary_vertices == frozenset({0, 10})
    assert graph.total_measure == pytest.approx(1.0)
    assert graph.quasiconvexity == 1.0


def test_rectangle_grid_measure_and_quasiconvexity():
    graph = grid_domain({"kind": "rectangle", "bounds": [[0.0, 1.0], [0.0, 1.0]]}, 0.25, stencil=8)
    assert graph.vertex_count == 25
    assert graph.total_measure == pytest.approx(1.0)
    assert graph.quasiconvexity == pytest.approx(1.0 / math.cos(math.pi / 8))
    assert len(graph.boundary_vertices) == 16


def test_stencil_quasiconvexity_ordering():
    four, eight, sixteen = (stencil_quasiconvexity(STENCILS[k]) for k in (4, 8, 16))
    assert four == pytest.approx(math.sqrt(2.0))
    assert 1.0 < sixteen < eight < four


def test_disk_grid_flags_the_rim():
    graph = grid_domain({"kind": "disk", "center": [0.0, 0.0], "radius": 1.0}, 0.25, stencil=16)
    rho = np.linalg.norm(graph.coords, axis=1)
    flagged = np.array([v.boundary for v in graph.vertices])
    assert not flagged[graph.nearest_vertex((0.0, 0.0))]
    assert np.all(rho[flagged] > 0.75 - 1e-12)
    assert graph.total_measure == pytest.approx(math.pi)


def test_grid_errors():
    with pytest.raises(EmptyDomain):
        grid_domain({"kind": "interval", "bounds": [1.0, 0.0]}, 0.1)
    with pytest.raises(EmptyDomain):
        grid_domain({"kind": "interval", "bounds": [0.0, 0.1]}, 0.1)
    with pytest.raises(ParseError):
        grid_domain({"kind": "torus"}, 0.1)


def test_overlay_retags_lattice_edges():
    graph = grid_domain({"kind": "disk", "radius": 1.0}, 0.25, stencil=16)
    a, b = graph.nearest_vertex((0.0, 0.0)), graph.nearest_vertex((1.0, 0.0))
    overlaid = overlay_segment(graph, a, b)
    assert overlaid.edge_count == graph.edge_count
    assert int(overlaid.tag_mask("segment").sum()) == 4


def test_overlay_adds_missing_link_with_zero_measure():
    graph = grid_domain({"kind": "disk", "radius": 1.0}, 0.25, stencil=8)
    a, b = graph.nearest_vertex((0.0, 0.0)), graph.nearest_vertex((0.75, 0.25))
    overlaid = overlay_segment(graph, a, b, tag="chord")
    assert overlaid.edge_count == graph.edge_count + 1
    assert overlaid.measures[-1] == 0.0
    assert overlaid.tags[-1] == "chord"
    assert overlaid.lengths[-1] == pytest.approx(math.hypot(0.75, 0.25))


def test_validate_path(path_graph):
    path_graph.validate_path(path_graph.path_through([0, 1, 2, 3]))
    with pytest.raises(InvalidPath):
        path_graph.path_through([0, 2])
    with pytest.raises(InvalidPath):
        path_graph.validate_path(Path((PathSegment(0, True, 0.0, 1.5),)))
    broken = Path((path_graph.full_segment(0, 0), path_graph.full_segment(2, 2)))
    with pytest.raises(InvalidPath):
        path_graph.validate_path(broken)


def test_constant_field_integrates_exactly(path_graph, quad):
    weights = integrate_edges(path_graph, WeightField.constant(2.0), quad)
    np.testing.assert_array_equal(weights, [2.0, 4.0, 1.0])


def test_linear_field_integrates_exactly(path_graph, quad):
    f = WeightField.from_expression("1 + x", alpha=1.0)
    weights = integrate_edges(path_graph, f, quad)
    np.testing.assert_allclose(weights, [1.5, 6.0, 2.125], rtol=1e-12)


def test_curve_integral_over_partial_segment(path_graph, quad):
    f = WeightField.constant(1.0)
    assert curve_integral(path_graph, f, path_graph.path_through([0, 1, 2]), quad) == pytest.approx(3.0)
    partial = Path((PathSegment(1, True, 0.5, 1.5),))
    assert curve_integral(path_graph, f, partial, quad) == pytest.approx(1.0)
    assert curve_integral(path_graph, f, Path(), quad) == 0.0


def test_integrable_singularity(quad):
    graph = build_graph(_spec([{"id": "o", "xy": [0.0, 0.0]}, {"id": "p", "xy": [1.0, 0.0]}],
                              [{"u": "o", "v": "p"}]))
    f = WeightField.from_points(lambda p: 1.0 / np.sqrt(np.abs(p[:, 0])), alpha=1.0)
    assert integrate_edges(graph, f, quad)[0] == pytest.approx(2.0, rel=1e-4)


def test_nonintegrable_singularity_is_infinite(quad):
    graph = build_graph(_spec([{"id": "o", "xy": [0.0, 0.0]}, {"id": "p", "xy": [1.0, 0.0]}],
                              [{"u": "o", "v": "p"}]))
    f = WeightField.from_points(lambda p: 1.0 / np.abs(p[:, 0]), alpha=1.0)
    assert math.isinf(integrate_edges(graph, f, quad)[0])


def test_weight_field_validation():
    with pytest.raises(ValueError):
        WeightField.constant(0.0)
    with pytest.raises(ValueError):
        WeightField.from_expression("1 + z", alpha=1.0)
    with pytest.raises(ValueError):
        WeightField.per_edge({0: 1.0, 2: 2.0})
    with pytest.raises(ValueError):
        WeightField.constant(2.0).truncated(1.0)


def test_truncation_declares_a_bound():
    f = WeightField.from_expression("1 / r", alpha=0.5, integrability="Lp", p=1.5)
    capped = f.truncated(10.0)
    assert capped.tag == "Linf"
    assert capped.sup_bound == 10.0
    assert f.truncated(math.inf) is f
    assert f.scaled(2.0).alpha == 1.0
