import logging
import math
from typing import Any, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from eikograph.core.graph.builder import check_connected
from eikograph.core.graph.types import Edge, MetricGraph, Vertex
from eikograph.core.utils import EmptyDomain, ParseError

logger = logging.getLogger(__name__)

# Positive half of each stencil; the graph is undirected
STENCILS = {
    4: [(1, 0), (0, 1)],
    8: [(1, 0), (0, 1), (1, 1), (1, -1)],
    16: [(1, 0), (0, 1), (1, 1), (1, -1), (1, 2), (2, 1), (1, -2), (2, -1)],
}

SNAP_TOL = 1e-12


def stencil_quasiconvexity(offsets: Sequence[Tuple[int, int]]) -> float:
    """Worst ratio of stencil path length to Euclidean distance.

    A direction lying in the cone between two neighbouring stencil directions is
    best reached by combining those two, which costs 1/cos(gap/2) per unit length
    at the cone's bisector.
    """
    directions = list(offsets) + [(-dx, -dy) for dx, dy in offsets]
    angles = np.sort(np.array([math.atan2(dy, dx) for dx, dy in directions]))
    gaps = np.diff(np.concatenate([angles, [angles[0] + 2 * math.pi]]))
    return float(1.0 / math.cos(float(np.max(gaps)) / 2.0))


def _lattice(bounds: Sequence[float], h: float) -> np.ndarray:
    a, b = float(bounds[0]), float(bounds[1])
    if not b > a:
        raise EmptyDomain(f"Empty interval [{a}, {b}]")
    cells = max(1, int(round((b - a) / h)))
    if abs(cells * h - (b - a)) > 1e-9 * max(1.0, b - a):
        logger.warning(f"Spacing {h:g} does not divide [{a:g}, {b:g}]; using {(b - a) / cells:g}")
    points = np.linspace(a, b, cells + 1)
    points[np.abs(points) < SNAP_TOL * max(1.0, b - a)] = 0.0
    return points


def _domain_points(domain: Mapping[str, Any], h: float) -> Tuple[List[Tuple[int, ...]], np.ndarray, np.ndarray, float, int]:
    """Lattice indices, coordinates, distance to the domain boundary, volume and dimension"""
    kind = domain.get("kind")
    if kind == "interval":
        xs = _lattice(domain["bounds"], h)
        a, b = xs[0], xs[-1]
        indices = [(i,) for i in range(len(xs))]
        return indices, xs.reshape(-1, 1), np.minimum(xs - a, b - xs), float(b - a), 1

    if kind == "rectangle":
        (x0, x1), (y0, y1) = domain["bounds"]
        xs = _lattice((x0, x1), h)
        ys = _lattice((y0, y1), h)
        ii, jj = np.meshgrid(np.arange(len(xs)), np.arange(len(ys)), indexing="ij")
        ii, jj = ii.ravel(), jj.ravel()
        points = np.column_stack([xs[ii], ys[jj]])
        gap = np.minimum.reduce([points[:, 0] - xs[0], xs[-1] - points[:, 0],
                                 points[:, 1] - ys[0], ys[-1] - points[:, 1]])
        volume = float((xs[-1] - xs[0]) * (ys[-1] - ys[0]))
        return list(zip(ii.tolist(), jj.tolist())), points, gap, volume, 2

    if kind == "disk":
        center = np.asarray(domain.get("center", (0.0, 0.0)), dtype=float)
        radius = float(domain["radius"])
        if not radius > 0:
            raise EmptyDomain(f"Disk radius must be positive, got {radius}")
        n = int(math.floor(radius / h + 1e-9))
        steps = np.arange(-n, n + 1)
        ii, jj = np.meshgrid(steps, steps, indexing="ij")
        ii, jj = ii.ravel(), jj.ravel()
        points = center + h * np.column_stack([ii, jj]).astype(float)
        points[np.abs(points) < SNAP_TOL * max(1.0, radius)] = 0.0
        rho = np.linalg.norm(points - center, axis=1)
        inside = rho <= radius * (1 + 1e-12)
        ii, jj, points, rho = ii[inside], jj[inside], points[inside], rho[inside]
        return list(zip(ii.tolist(), jj.tolist())), points, radius - rho, math.pi * radius ** 2, 2

    raise ParseError(f"unknown domain kind {kind!r}", "grid.domain.kind")


def grid_domain(domain: Mapping[str, Any], h: float, stencil: int = 8,
                name: Optional[str] = None) -> MetricGraph:
    """Sample a Euclidean interval, rectangle or disk on a lattice of spacing h.

    Vertices closer than h to the domain boundary are boundary-flagged. In one
    dimension edge measure is edge length; in two, each vertex's cell h^2 is shared
    equally among its incident edges and the total is rescaled to the exact area.
    """
    if not h > 0:
        raise ValueError(f"Grid spacing must be positive, got {h}")
    if stencil not in STENCILS:
        raise ValueError(f"Stencil must be one of {sorted(STENCILS)}, got {stencil}")

    try:
        indices, points, gap, volume, dimension = _domain_points(domain, h)
    except (KeyError, TypeError, ValueError) as e:
        raise ParseError(f"malformed domain {dict(domain)}: {e}", "grid.domain") from e
    boundary = gap < h * (1 - 1e-9)
    if boundary.all():
        raise EmptyDomain(f"No interior grid point for {domain} at h={h:g}")

    lookup = {index: vid for vid, index in enumerate(indices)}
    offsets = [(1,)] if dimension == 1 else STENCILS[stencil]
    pairs: List[Tuple[int, int]] = []
    for offset in offsets:
        for vid, index in enumerate(indices):
            neighbour = lookup.get(tuple(i + d for i, d in zip(index, offset)))
            if neighbour is not None:
                pairs.append((vid, neighbour))

    ends = np.array(pairs, dtype=np.int64).reshape(-1, 2)
    lengths = np.linalg.norm(points[ends[:, 1]] - points[ends[:, 0]], axis=1)
    if dimension == 1:
        measures = lengths.copy()
    else:
        degree = np.bincount(ends.ravel(), minlength=len(indices)).astype(float)
        share = np.divide(1.0, degree, out=np.zeros_like(degree), where=degree > 0)
        measures = h ** dimension * (share[ends[:, 0]] + share[ends[:, 1]])
        measures *= volume / measures.sum()

    vertices = tuple(
        Vertex(vid, tuple(float(c) for c in points[vid]), bool(boundary[vid]))
        for vid in range(len(indices))
    )
    edges = tuple(
        Edge(eid, int(u), int(v), float(length), float(measure))
        for eid, ((u, v), length, measure) in enumerate(zip(ends.tolist(), lengths, measures))
    )
    quasiconvexity = 1.0 if dimension == 1 else stencil_quasiconvexity(offsets)
    graph = MetricGraph(
        vertices, edges,
        name=name or f"{domain.get('kind', 'grid')}_h{h:g}",
        ambient_dimension=dimension,
        quasiconvexity=quasiconvexity,
        metadata={"domain": dict(domain), "h": h, "stencil": stencil if dimension > 1 else 2},
    )
    check_connected(graph)
    logger.debug(f"Grid {graph.name}: {graph.vertex_count} vertices, {graph.edge_count} edges, "
                 f"quasiconvexity {quasiconvexity:.4f}")
    return graph
