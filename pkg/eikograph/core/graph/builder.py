import logging
import math
from typing import Any, Dict, List, Mapping, Optional, Sequence

import networkx as nx
import numpy as np
from scipy.sparse.csgraph import connected_components

from eikograph.core.graph.types import Edge, MetricGraph, Vertex
from eikograph.core.utils import (
    DisconnectedGraph, EmptyBoundary, NonpositiveEdgeLength, ParseError
)

logger = logging.getLogger(__name__)

# Vertices closer than this (relative to the segment length) to a segment lie on it
COLLINEAR_TOL = 1e-9


def _require(container: Mapping[str, Any], key: str, location: str) -> Any:
    if key not in container:
        raise ParseError(f"missing required field '{key}'", location)
    return container[key]


def check_connected(graph: MetricGraph) -> None:
    """Raise DisconnectedGraph unless the graph has exactly one component"""
    if graph.vertex_count == 0:
        raise DisconnectedGraph(f"{graph.name}: graph has no vertices")
    if graph.edge_count == 0:
        components = graph.vertex_count
    else:
        components, _ = connected_components(graph.sparse_matrix(), directed=False)
    if components != 1:
        raise DisconnectedGraph(f"{graph.name}: graph has {components} connected components")


def build_graph(spec: Mapping[str, Any], require_boundary: bool = False) -> MetricGraph:
    """Build and validate a metric graph from a scenario description.

    Args:
        spec: Either ``{"name", "graph": {"vertices": [...], "edges": [...]}}`` or
            ``{"name", "grid": {"domain", "h", "stencil"}}``
        require_boundary: Raise EmptyBoundary when no vertex is boundary-flagged

    Returns:
        MetricGraph with vertices renumbered 0..V-1 in listing order; the original
        ids are kept as vertex labels.
    """
    name = str(spec.get("name", "graph"))
    if "grid" in spec:
        from eikograph.core.graph.grid import grid_domain

        grid = spec["grid"]
        if not isinstance(grid, Mapping):
            raise ParseError("expected an object", "grid")
        try:
            h = float(_require(grid, "h", "grid"))
            stencil = int(grid.get("stencil", 8))
        except (TypeError, ValueError) as e:
            raise ParseError(f"bad grid parameter: {e}", "grid") from e
        graph = grid_domain(_require(grid, "domain", "grid"), h, stencil, name=name)
    else:
        body = _require(spec, "graph", "")
        graph = _build_explicit(body, name)

    if require_boundary and not graph.boundary_vertices:
        raise EmptyBoundary(f"{name}: no vertex is flagged as boundary")
    logger.debug(f"Built graph '{name}': {graph.vertex_count} vertices, {graph.edge_count} edges")
    return graph


def _build_explicit(body: Mapping[str, Any], name: str) -> MetricGraph:
    vertex_specs = _require(body, "vertices", "graph")
    edge_specs = _require(body, "edges", "graph")
    if not isinstance(vertex_specs, list) or not vertex_specs:
        raise ParseError("expected a nonempty list", "graph.vertices")
    if not isinstance(edge_specs, list):
        raise ParseError("expected a list", "graph.edges")

    index: Dict[Any, int] = {}
    vertices: List[Vertex] = []
    dimension: Optional[int] = None
    for i, item in enumerate(vertex_specs):
        location = f"graph.vertices[{i}]"
        key = _require(item, "id", location)
        if key in index:
            raise ParseError(f"duplicate vertex id {key!r}", f"{location}.id")
        coords = tuple(float(c) for c in item.get("xy", ()))
        if dimension is None:
            dimension = len(coords)
        elif len(coords) != dimension:
            raise ParseError(f"expected {dimension} coordinates, got {len(coords)}", f"{location}.xy")
        index[key] = len(vertices)
        vertices.append(Vertex(len(vertices), coords, bool(item.get("boundary", False)),
                               str(item.get("label", key))))

    coords = np.array([v.coords for v in vertices], dtype=float).reshape(len(vertices), dimension or 0)
    edges: List[Edge] = []
    for i, item in enumerate(edge_specs):
        location = f"graph.edges[{i}]"
        ends = []
        for side in ("u", "v"):
            key = _require(item, side, location)
            if key not in index:
                raise ParseError(f"unknown vertex {key!r}", f"{location}.{side}")
            ends.append(index[key])
        u, v = ends
        if u == v:
            raise ParseError("self-loops are not allowed", location)
        if "length" in item:
            length = float(item["length"])
        elif dimension:
            length = float(np.linalg.norm(coords[u] - coords[v]))
        else:
            raise ParseError("length is required when vertices have no coordinates", f"{location}.length")
        if not (math.isfinite(length) and length > 0):
            raise NonpositiveEdgeLength(f"{location}: edge length must be positive, got {length}")
        measure = float(item.get("measure", length))
        if not measure >= 0:
            raise ParseError(f"measure must be nonnegative, got {measure}", f"{location}.measure")
        edges.append(Edge(len(edges), u, v, length, measure,
                          offset=float(item.get("offset", 0.0)), tag=str(item.get("tag", ""))))

    graph = MetricGraph(tuple(vertices), tuple(edges), name=name,
                        ambient_dimension=dimension or 0, quasiconvexity=1.0)
    check_connected(graph)
    return graph


def refine(graph: MetricGraph, factor: int) -> MetricGraph:
    """Split every edge into ``factor`` equal sub-edges.

    New vertices sit at interpolated coordinates. Sub-edges keep the parent's tag,
    origin and orientation; offsets advance along the parent so curve-parameterised
    fields evaluate identically.
    """
    if int(factor) != factor or factor < 2:
        raise ValueError(f"Refinement factor must be an integer >= 2, got {factor}")
    factor = int(factor)
    vertices = list(graph.vertices)
    edges: List[Edge] = []
    origins = graph.origins
    for edge in graph.edges:
        a = graph.coords[edge.u]
        b = graph.coords[edge.v]
        chain = [edge.u]
        for k in range(1, factor):
            point = a + (b - a) * (k / factor)
            vertices.append(Vertex(len(vertices), tuple(float(c) for c in point)))
            chain.append(len(vertices) - 1)
        chain.append(edge.v)
        piece = edge.length / factor
        for k in range(factor):
            edges.append(Edge(len(edges), chain[k], chain[k + 1], piece, edge.measure / factor,
                              offset=edge.offset + k * piece, origin=int(origins[edge.id]), tag=edge.tag))

    metadata = dict(graph.metadata)
    metadata["refined"] = metadata.get("refined", 1) * factor
    return MetricGraph(tuple(vertices), tuple(edges), name=graph.name,
                       ambient_dimension=graph.ambient_dimension,
                       quasiconvexity=graph.quasiconvexity, metadata=metadata)


def overlay_segment(graph: MetricGraph, a: int, b: int, tag: str = "segment") -> MetricGraph:
    """Embed the straight segment from vertex a to vertex b as tagged edges.

    Every vertex lying on the segment becomes a chain stop. Existing edges between
    consecutive stops are retagged; missing links are added with zero measure.
    """
    if graph.ambient_dimension == 0:
        raise ValueError("overlay_segment needs vertex coordinates")
    start = graph.coords[a]
    direction = graph.coords[b] - start
    span = float(np.linalg.norm(direction))
    if span == 0:
        raise ValueError(f"Vertices {a} and {b} coincide")
    unit = direction / span
    relative = graph.coords - start
    along = relative @ unit
    across = np.linalg.norm(relative - np.outer(along, unit), axis=1)
    tol = COLLINEAR_TOL * span
    on_segment = (across <= tol) & (along >= -tol) & (along <= span + tol)
    stops = np.flatnonzero(on_segment)
    stops = stops[np.argsort(along[stops], kind="stable")].tolist()

    edges = list(graph.edges)
    added = retagged = 0
    for p, q in zip(stops[:-1], stops[1:]):
        existing = [e for n, e in graph.adjacency[p] if n == q]
        if existing:
            for edge_id in existing:
                old = edges[edge_id]
                edges[edge_id] = Edge(old.id, old.u, old.v, old.length, old.measure,
                                      offset=old.offset, origin=old.origin, tag=tag)
                retagged += 1
        else:
            length = float(np.linalg.norm(graph.coords[q] - graph.coords[p]))
            edges.append(Edge(len(edges), p, q, length, 0.0, tag=tag))
            added += 1

    logger.debug(f"Overlaid segment {a}->{b}: {len(stops)} stops, {retagged} retagged, {added} added")
    return MetricGraph(graph.vertices, tuple(edges), name=graph.name,
                       ambient_dimension=graph.ambient_dimension,
                       quasiconvexity=graph.quasiconvexity, metadata=dict(graph.metadata))


def with_boundary(graph: MetricGraph, boundary: Sequence[int]) -> MetricGraph:
    """Copy of the graph whose boundary flags are exactly the given vertices"""
    flagged = set(int(v) for v in boundary)
    vertices = tuple(Vertex(v.id, v.coords, v.id in flagged, v.label) for v in graph.vertices)
    return MetricGraph(vertices, graph.edges, name=graph.name,
                       ambient_dimension=graph.ambient_dimension,
                       quasiconvexity=graph.quasiconvexity, metadata=dict(graph.metadata))


def to_networkx(graph: MetricGraph, weights: Optional[np.ndarray] = None) -> nx.Graph:
    """Simple networkx graph with a ``weight`` attribute (minimum over parallel edges)"""
    weights = graph.lengths if weights is None else np.asarray(weights, dtype=float)
    result = nx.Graph()
    result.add_nodes_from(range(graph.vertex_count))
    for (u, v), w in zip(graph.endpoints.tolist(), weights.tolist()):
        if not math.isfinite(w):
            continue
        if result.has_edge(u, v) and result[u][v]["weight"] <= w:
            continue
        result.add_edge(u, v, weight=w)
    return result
