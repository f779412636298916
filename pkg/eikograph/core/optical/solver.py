import logging
import math
from dataclasses import dataclass, field
from heapq import heappop, heappush
from typing import Any, Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.sparse.csgraph import dijkstra

from eikograph.core.graph.field import WeightField
from eikograph.core.graph.quadrature import QuadratureSettings, integrate_edges
from eikograph.core.graph.types import MetricGraph, Path
from eikograph.core.utils import EmptySourceSet

logger = logging.getLogger(__name__)


@dataclass
class OpticalTable:
    """Optical distances from a source set with the witness shortest-path tree.

    ``dist[v]`` is min over sources s of initial(s) + L_f(s, v). ``parent`` and
    ``parent_edge`` are -1 at sources and unreached vertices; ``root`` is the source
    a vertex's witness path starts from.
    """
    sources: Tuple[int, ...]
    dist: np.ndarray
    parent: np.ndarray
    parent_edge: np.ndarray
    root: np.ndarray
    meta: Dict[str, Any] = field(default_factory=dict)

    def witness(self, graph: MetricGraph, y: int) -> Path:
        """Shortest path from the root source to y; empty when y is unreachable"""
        if not math.isfinite(self.dist[y]):
            return Path()
        stops = [int(y)]
        edges: List[int] = []
        while self.parent[stops[-1]] >= 0:
            edges.append(int(self.parent_edge[stops[-1]]))
            stops.append(int(self.parent[stops[-1]]))
        stops.reverse()
        edges.reverse()
        segments = tuple(graph.full_segment(e, start=a) for e, a in zip(edges, stops[:-1]))
        return Path(segments, start=stops[0], end=stops[-1])

    def to_frame(self, graph: MetricGraph) -> pd.DataFrame:
        """Rows vertex_id, x, y, dist, parent_id"""
        coords = graph.coords
        missing = np.full(graph.vertex_count, np.nan)
        return pd.DataFrame({
            'vertex_id': np.arange(graph.vertex_count),
            'x': coords[:, 0] if graph.ambient_dimension > 0 else missing,
            'y': coords[:, 1] if graph.ambient_dimension > 1 else np.zeros(graph.vertex_count),
            'dist': self.dist,
            'parent_id': self.parent,
        })


@dataclass
class FinitenessReport:
    """Counts of finite and infinite distances in a table"""
    finite: int
    infinite: int
    max_finite: float

    @property
    def all_finite(self) -> bool:
        return self.infinite == 0


def edge_weights(graph: MetricGraph, f: WeightField,
                 quad: Optional[QuadratureSettings] = None) -> np.ndarray:
    """Cost of traversing each whole edge, the curve integral of f over it"""
    weights = integrate_edges(graph, f, quad)
    infinite = int(np.sum(np.isinf(weights)))
    if infinite:
        logger.debug(f"{f.name}: {infinite} of {graph.edge_count} edges carry infinite weight")
    return weights


def label_setting(graph: MetricGraph, weights: np.ndarray, sources: Iterable[int],
                  initial: Optional[Mapping[int, float]] = None, cutoff: float = math.inf,
                  sealed: FrozenSet[int] = frozenset(), target: Optional[int] = None
                  ) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Multi-source label-setting search over nonnegative edge weights.

    The heap holds (distance, vertex id), so equal distances settle in vertex-id
    order, and a label changes only on strict improvement. Vertices beyond
    ``cutoff`` stay at +inf. Sealed vertices other than sources can be reached but
    are never expanded. The search stops once ``target`` is settled.
    """
    initial = initial or {}
    count = graph.vertex_count
    dist = [math.inf] * count
    parent = [-1] * count
    parent_edge = [-1] * count
    root = [-1] * count
    settled = [False] * count
    heap: List[Tuple[float, int]] = []
    source_set = set()
    for s in sorted(set(int(v) for v in sources)):
        if not 0 <= s < count:
            raise ValueError(f"Source {s} is not a vertex of {graph.name}")
        source_set.add(s)
        value = float(initial.get(s, 0.0))
        if value < dist[s]:
            dist[s] = value
            root[s] = s
            heappush(heap, (value, s))
    if not source_set:
        raise EmptySourceSet("Shortest-path search needs at least one source")

    adjacency = graph.adjacency
    w = np.asarray(weights, dtype=float).tolist()
    while heap:
        d, x = heappop(heap)
        if settled[x] or d > dist[x]:
            continue
        settled[x] = True
        if x == target:
            break
        if x in sealed and x not in source_set:
            continue
        for y, e in adjacency[x]:
            if settled[y]:
                continue
            candidate = d + w[e]
            if candidate < dist[y] and candidate <= cutoff:
                dist[y] = candidate
                parent[y] = x
                parent_edge[y] = e
                root[y] = root[x]
                heappush(heap, (candidate, y))

    return (np.array(dist, dtype=float), np.array(parent, dtype=np.int64),
            np.array(parent_edge, dtype=np.int64), np.array(root, dtype=np.int64))


def optical_from_sources(graph: MetricGraph, f: WeightField, sources: Iterable[int],
                         initial: Optional[Mapping[int, float]] = None,
                         quad: Optional[QuadratureSettings] = None,
                         weights: Optional[np.ndarray] = None,
                         cutoff: float = math.inf,
                         sealed: FrozenSet[int] = frozenset()) -> OpticalTable:
    """Distances min_s initial(s) + L_f(s, v) for every vertex v.

    Args:
        graph: The metric graph
        f: Weight field
        sources: Nonempty source vertex ids
        initial: Per-source starting values, 0 when absent
        quad: Quadrature settings used for edge weights
        weights: Precomputed edge weights; skips quadrature when given
        cutoff: Leave vertices farther than this at +inf
        sealed: Vertices that may end but not pass through a path

    Raises:
        EmptySourceSet: If no source is given
    """
    sources = tuple(sorted(set(int(s) for s in sources)))
    if not sources:
        raise EmptySourceSet("optical_from_sources needs at least one source")
    quad = quad or QuadratureSettings.from_settings()
    if weights is None:
        weights = edge_weights(graph, f, quad)
    dist, parent, parent_edge, root = label_setting(graph, weights, sources, initial, cutoff, sealed)
    meta = {'quadrature': quad.describe(), 'truncation': None, 'field': f.name}
    return OpticalTable(sources, dist, parent, parent_edge, root, meta)


def optical_pair(graph: MetricGraph, f: WeightField, x: int, y: int,
                 quad: Optional[QuadratureSettings] = None,
                 weights: Optional[np.ndarray] = None) -> Tuple[float, Path]:
    """L_f(x, y) with a witness path; (+inf, empty path) when no finite path exists"""
    if x == y:
        return 0.0, Path()
    if weights is None:
        weights = edge_weights(graph, f, quad)
    dist, parent, parent_edge, root = label_setting(graph, weights, [x], target=y)
    table = OpticalTable((x,), dist, parent, parent_edge, root)
    return float(dist[y]), table.witness(graph, y)


def truncated_solve(graph: MetricGraph, f: WeightField, M: float, sources: Iterable[int],
                    initial: Optional[Mapping[int, float]] = None,
                    quad: Optional[QuadratureSettings] = None) -> OpticalTable:
    """optical_from_sources with the running cost capped at M"""
    table = optical_from_sources(graph, f.truncated(M), sources, initial, quad)
    table.meta['truncation'] = None if math.isinf(M) else float(M)
    return table


def distance_matrix(graph: MetricGraph, weights: np.ndarray,
                    sources: Optional[Sequence[int]] = None, limit: float = math.inf) -> np.ndarray:
    """Rows of optical distances from each source (all vertices when None)"""
    indices = list(range(graph.vertex_count)) if sources is None else list(sources)
    if not indices:
        return np.zeros((0, graph.vertex_count))
    return dijkstra(graph.sparse_matrix(weights), directed=False, indices=indices, limit=limit)


def finiteness_report(table: OpticalTable) -> FinitenessReport:
    finite = np.isfinite(table.dist)
    largest = float(np.max(table.dist[finite])) if finite.any() else 0.0
    return FinitenessReport(int(finite.sum()), int((~finite).sum()), largest)


def optical_diameter(graph: MetricGraph, weights: np.ndarray, start: int = 0) -> float:
    """Double-sweep estimate of the largest finite optical distance"""
    dist = label_setting(graph, weights, [start])[0]
    finite = np.where(np.isfinite(dist), dist, -1.0)
    far = int(np.argmax(finite))
    dist = label_setting(graph, weights, [far])[0]
    finite = dist[np.isfinite(dist)]
    return float(finite.max()) if finite.size else 0.0
