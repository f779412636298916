import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
from scipy.sparse.csgraph import dijkstra

from eikograph.core.config import get_settings
from eikograph.core.graph.builder import to_networkx
from eikograph.core.graph.field import WeightField
from eikograph.core.graph.quadrature import QuadratureSettings
from eikograph.core.graph.types import MetricGraph
from eikograph.core.optical.solver import edge_weights
from eikograph.core.utils import BudgetExceeded, sample_vertices, vanishes

logger = logging.getLogger(__name__)

CHUNK_ROWS = 256
# Relative slack for comparisons that differ only by summation order
ROUNDING_TOL = 1e-12


@dataclass
class MetricAxiomReport:
    """Outcome of sampled metric-axiom checks on L_f"""
    triples_checked: int
    violations: List[Tuple[str, Tuple[int, ...], float]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    def count(self, axiom: str) -> int:
        return sum(1 for name, _, _ in self.violations if name == axiom)


@dataclass
class ModulusReport:
    """sup L_f over pairs within graph distance r, plain and restricted to the boundary collar"""
    radii: List[float]
    modulus: Dict[float, float]
    collar: Dict[float, float]
    sources_scanned: int
    exhaustive: bool

    @property
    def vanishing(self) -> bool:
        """Judged on the schedule: the smallest radius has at most half the largest radius' value"""
        return vanishes(self.modulus)

    @property
    def collar_vanishing(self) -> bool:
        return vanishes(self.collar)


def _close(a: float, b: float) -> bool:
    if math.isinf(a) or math.isinf(b):
        return a == b
    return abs(a - b) <= ROUNDING_TOL * max(1.0, abs(a), abs(b))


def check_metric_axioms(graph: MetricGraph, f: WeightField, sample_count: int = 200,
                        seed: int = 0, quad: Optional[QuadratureSettings] = None,
                        weights: Optional[np.ndarray] = None) -> MetricAxiomReport:
    """Check nonnegativity, identity, symmetry, triangle inequality and L_f >= alpha * d_G on sampled triples"""
    if weights is None:
        weights = edge_weights(graph, f, quad)
    rng = np.random.default_rng(seed)
    triples = rng.integers(0, graph.vertex_count, size=(sample_count, 3))
    involved = sorted(set(triples.ravel().tolist()))
    row = {v: i for i, v in enumerate(involved)}
    optical = dijkstra(graph.sparse_matrix(weights), directed=False, indices=involved)
    metric = graph.graph_distances(involved)

    report = MetricAxiomReport(triples_checked=sample_count)

    def L(a: int, b: int) -> float:
        return float(optical[row[a], b])

    for x, y, z in triples.tolist():
        lxy, lyx = L(x, y), L(y, x)
        if lxy < 0:
            report.violations.append(("nonnegativity", (x, y), lxy))
        if L(x, x) != 0:
            report.violations.append(("identity", (x,), L(x, x)))
        if x != y and lxy <= 0:
            report.violations.append(("identity", (x, y), lxy))
        if not _close(lxy, lyx):
            report.violations.append(("symmetry", (x, y), lxy - lyx))
        via = L(x, y) + L(y, z)
        if L(x, z) > via + ROUNDING_TOL * max(1.0, via):
            report.violations.append(("triangle", (x, y, z), L(x, z) - via))
        floor = f.alpha * float(metric[row[x], y])
        if lxy < floor - ROUNDING_TOL * max(1.0, floor):
            report.violations.append(("lower_bound", (x, y), floor - lxy))

    if report.violations:
        logger.warning(f"{graph.name}: {len(report.violations)} metric axiom violations")
    return report


def topology_modulus(graph: MetricGraph, f: WeightField, radii: Sequence[float],
                     quad: Optional[QuadratureSettings] = None, budget: Optional[int] = None,
                     weights: Optional[np.ndarray] = None, seed: int = 0) -> ModulusReport:
    """sup{L_f(x, y) : d_G(x, y) <= r} for each radius, plus the collar variant.

    The collar variant restricts both points to within r of the boundary-flagged
    vertices. Every vertex is scanned when the graph is within the all-pairs limit;
    larger graphs scan ``budget`` sampled sources.

    Raises:
        BudgetExceeded: If the graph is too large and no budget is given
    """
    radii = sorted(float(r) for r in radii)
    if not radii or radii[0] <= 0:
        raise ValueError("Radii must be positive")
    if weights is None:
        weights = edge_weights(graph, f, quad)

    limit = get_settings().all_pairs_limit
    exhaustive = graph.vertex_count <= limit
    if exhaustive:
        sources = list(range(graph.vertex_count))
    elif budget:
        sources = sample_vertices(range(graph.vertex_count), budget, seed)
        logger.info(f"{graph.name}: sampling {len(sources)} of {graph.vertex_count} sources for the modulus scan")
    else:
        raise BudgetExceeded(f"{graph.name} has {graph.vertex_count} vertices (limit {limit}) and no sample budget")

    optical_matrix = graph.sparse_matrix(weights)
    collar_depth = graph.distance_to(sorted(graph.boundary_vertices))
    modulus = {r: 0.0 for r in radii}
    collar = {r: 0.0 for r in radii}
    for start in range(0, len(sources), CHUNK_ROWS):
        chunk = sources[start:start + CHUNK_ROWS]
        optical = dijkstra(optical_matrix, directed=False, indices=chunk)
        metric = graph.graph_distances(chunk, limit=radii[-1])
        depth = collar_depth[chunk]
        for r in radii:
            near = metric <= r
            if near.any():
                modulus[r] = max(modulus[r], float(np.max(optical[near])))
            in_collar = near & (depth[:, None] <= r) & (collar_depth[None, :] <= r)
            if in_collar.any():
                collar[r] = max(collar[r], float(np.max(optical[in_collar])))

    return ModulusReport(radii, modulus, collar, len(sources), exhaustive)


def brute_force_optical(graph: MetricGraph, weights: np.ndarray, x: int, y: int) -> float:
    """Exhaustive minimum of path weight over all simple paths from x to y"""
    if x == y:
        return 0.0
    nxg = to_networkx(graph, weights)
    best = math.inf
    for route in nx.all_simple_paths(nxg, x, y):
        total = math.fsum(nxg[a][b]['weight'] for a, b in zip(route[:-1], route[1:]))
        best = min(best, total)
    return best
