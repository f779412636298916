from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from eikograph.core.utils import InvalidPath

# Positions along an edge within this distance of an endpoint count as the endpoint
ENDPOINT_TOL = 1e-12


@dataclass(frozen=True)
class Vertex:
    """A vertex of a metric graph"""
    id: int
    coords: Tuple[float, ...] = ()
    boundary: bool = False
    label: str = ""


@dataclass(frozen=True)
class Edge:
    """A straight edge from u to v, arc-length parameterised by s in [0, length]"""
    id: int
    u: int
    v: int
    length: float
    measure: float
    offset: float = 0.0
    origin: int = -1
    tag: str = ""

    def other(self, vertex: int) -> int:
        return self.v if vertex == self.u else self.u


@dataclass(frozen=True)
class PathSegment:
    """Traversal of [s0, s1] on an edge; forward means from s0 towards s1"""
    edge: int
    forward: bool
    s0: float
    s1: float

    @property
    def length(self) -> float:
        return self.s1 - self.s0


@dataclass(frozen=True)
class Path:
    """An ordered walk made of edge segments"""
    segments: Tuple[PathSegment, ...] = ()
    start: Optional[int] = None
    end: Optional[int] = None

    @property
    def length(self) -> float:
        return float(sum(segment.length for segment in self.segments))

    @property
    def is_empty(self) -> bool:
        return not self.segments

    def reversed(self) -> "Path":
        segments = tuple(
            PathSegment(s.edge, not s.forward, s.s0, s.s1) for s in reversed(self.segments)
        )
        return Path(segments, start=self.end, end=self.start)

    def concat(self, other: "Path") -> "Path":
        if self.is_empty:
            return other
        if other.is_empty:
            return self
        return Path(self.segments + other.segments, start=self.start, end=other.end)


@dataclass(frozen=True)
class MetricGraph:
    """Discretised length space: vertices, straight edges with lengths and measure weights.

    Instances are immutable; derived arrays are cached on first use and safe to
    share between worker threads.
    """
    vertices: Tuple[Vertex, ...]
    edges: Tuple[Edge, ...]
    name: str = "graph"
    ambient_dimension: int = 0
    quasiconvexity: float = 1.0
    metadata: Dict = field(default_factory=dict, compare=False, hash=False)

    @property
    def vertex_count(self) -> int:
        return len(self.vertices)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @cached_property
    def adjacency(self) -> List[List[Tuple[int, int]]]:
        """Per vertex: (neighbour, edge id) pairs sorted by neighbour then edge id"""
        adjacency: List[List[Tuple[int, int]]] = [[] for _ in self.vertices]
        for edge in self.edges:
            adjacency[edge.u].append((edge.v, edge.id))
            adjacency[edge.v].append((edge.u, edge.id))
        for items in adjacency:
            items.sort()
        return adjacency

    @cached_property
    def coords(self) -> np.ndarray:
        return np.array([v.coords for v in self.vertices], dtype=float).reshape(
            self.vertex_count, self.ambient_dimension
        )

    @cached_property
    def lengths(self) -> np.ndarray:
        return np.array([e.length for e in self.edges], dtype=float)

    @cached_property
    def measures(self) -> np.ndarray:
        return np.array([e.measure for e in self.edges], dtype=float)

    @cached_property
    def endpoints(self) -> np.ndarray:
        return np.array([(e.u, e.v) for e in self.edges], dtype=np.int64).reshape(self.edge_count, 2)

    @cached_property
    def offsets(self) -> np.ndarray:
        return np.array([e.offset for e in self.edges], dtype=float)

    @cached_property
    def origins(self) -> np.ndarray:
        return np.array([e.origin if e.origin >= 0 else e.id for e in self.edges], dtype=np.int64)

    @cached_property
    def tags(self) -> np.ndarray:
        return np.array([e.tag for e in self.edges], dtype=object)

    @cached_property
    def boundary_vertices(self) -> FrozenSet[int]:
        return frozenset(v.id for v in self.vertices if v.boundary)

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.array([len(items) for items in self.adjacency], dtype=np.int64)

    @property
    def total_measure(self) -> float:
        return float(np.sum(self.measures))

    @cached_property
    def _tag_masks(self) -> Dict[str, np.ndarray]:
        return {}

    def tag_mask(self, tag: str) -> np.ndarray:
        mask = self._tag_masks.get(tag)
        if mask is None:
            mask = self.tags == tag
            self._tag_masks[tag] = mask
        return mask

    def edge_points(self, edge_ids: np.ndarray, s: np.ndarray) -> np.ndarray:
        """Ambient coordinates of the points at arc length s along each edge"""
        ends = self.endpoints[edge_ids]
        a = self.coords[ends[:, 0]]
        b = self.coords[ends[:, 1]]
        t = (s / self.lengths[edge_ids])[:, None]
        return a + (b - a) * t

    def nearest_vertex(self, point: Sequence[float]) -> int:
        """Vertex closest to a point in ambient coordinates, lowest id on ties"""
        target = np.asarray(point, dtype=float).reshape(1, -1)
        gaps = np.linalg.norm(self.coords - target, axis=1)
        return int(np.argmin(gaps))

    def sparse_matrix(self, weights: Optional[np.ndarray] = None) -> csr_matrix:
        """Symmetric sparse matrix of edge weights; parallel edges keep the minimum and +inf edges are dropped"""
        weights = self.lengths if weights is None else np.asarray(weights, dtype=float)
        best: Dict[Tuple[int, int], float] = {}
        for (u, v), w in zip(self.endpoints.tolist(), weights.tolist()):
            if not np.isfinite(w) or u == v:
                continue
            key = (u, v) if u < v else (v, u)
            if w < best.get(key, np.inf):
                best[key] = w
        if not best:
            return csr_matrix((self.vertex_count, self.vertex_count))
        keys = np.array(list(best.keys()), dtype=np.int64)
        values = np.array(list(best.values()), dtype=float)
        rows = np.concatenate([keys[:, 0], keys[:, 1]])
        cols = np.concatenate([keys[:, 1], keys[:, 0]])
        data = np.concatenate([values, values])
        return csr_matrix((data, (rows, cols)), shape=(self.vertex_count, self.vertex_count))

    @cached_property
    def _length_matrix(self) -> csr_matrix:
        return self.sparse_matrix()

    def graph_distances(self, sources: Sequence[int], limit: float = np.inf) -> np.ndarray:
        """d_G rows for each source (shape len(sources) x V)"""
        return dijkstra(self._length_matrix, directed=False, indices=list(sources), limit=limit)

    def distance_to(self, targets: Sequence[int], limit: float = np.inf) -> np.ndarray:
        """d_G(x, targets) for every vertex x"""
        if not targets:
            return np.full(self.vertex_count, np.inf)
        return dijkstra(self._length_matrix, directed=False, indices=list(targets),
                        min_only=True, limit=limit)

    def segment_endpoint(self, segment: PathSegment, exit: bool) -> Tuple[str, object]:
        """Identify the entry or exit point of a segment as a vertex or an interior position"""
        edge = self.edges[segment.edge]
        s = segment.s1 if segment.forward == exit else segment.s0
        if s <= ENDPOINT_TOL:
            return ("vertex", edge.u)
        if s >= edge.length - ENDPOINT_TOL:
            return ("vertex", edge.v)
        return ("point", (edge.id, round(s, 12)))

    def validate_path(self, path: Path) -> None:
        """Raise InvalidPath unless consecutive segments share endpoints within edge bounds"""
        previous = None
        for index, segment in enumerate(path.segments):
            if not 0 <= segment.edge < self.edge_count:
                raise InvalidPath(f"Segment {index} references unknown edge {segment.edge}")
            edge = self.edges[segment.edge]
            if segment.s0 < -ENDPOINT_TOL or segment.s1 > edge.length + ENDPOINT_TOL or segment.s0 > segment.s1:
                raise InvalidPath(f"Segment {index} interval [{segment.s0}, {segment.s1}] "
                                  f"is outside edge {edge.id} of length {edge.length}")
            entry = self.segment_endpoint(segment, exit=False)
            if previous is not None and entry != previous:
                raise InvalidPath(f"Segment {index} does not start where segment {index - 1} ends")
            previous = self.segment_endpoint(segment, exit=True)

    def path_through(self, vertex_ids: Sequence[int]) -> Path:
        """Path visiting the given vertices along connecting edges (lowest edge id when parallel)"""
        segments = []
        for a, b in zip(vertex_ids[:-1], vertex_ids[1:]):
            edge_id = next((e for n, e in self.adjacency[a] if n == b), None)
            if edge_id is None:
                raise InvalidPath(f"Vertices {a} and {b} are not adjacent")
            segments.append(self.full_segment(edge_id, start=a))
        start = vertex_ids[0] if vertex_ids else None
        end = vertex_ids[-1] if vertex_ids else None
        return Path(tuple(segments), start=start, end=end)

    def full_segment(self, edge_id: int, start: int) -> PathSegment:
        edge = self.edges[edge_id]
        return PathSegment(edge_id, start == edge.u, 0.0, edge.length)
