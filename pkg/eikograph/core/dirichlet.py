import logging
import math
from dataclasses import dataclass, field, replace
from typing import Any, Dict, FrozenSet, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from eikograph.core.config import get_settings
from eikograph.core.graph.field import WeightField
from eikograph.core.graph.quadrature import QuadratureSettings
from eikograph.core.graph.types import MetricGraph
from eikograph.core.optical.solver import (
    OpticalTable, distance_matrix, edge_weights, optical_diameter, optical_from_sources
)
from eikograph.core.utils import (
    EmptyBoundary, EmptyEffectiveBoundary, InvalidBoundary, geometric_radii, sample_vertices, vanishes
)

logger = logging.getLogger(__name__)

# Largest boundary for which compatibility lists every violating pair
PAIRWISE_BOUNDARY_LIMIT = 64
CHUNK_ROWS = 256


@dataclass(frozen=True)
class DirichletProblem:
    """|grad u| = f in the graph with u = g on the listed boundary vertices"""
    graph: MetricGraph
    f: WeightField
    g: Mapping[int, float]

    def __post_init__(self):
        if not self.g:
            raise EmptyBoundary(f"{self.graph.name}: Dirichlet data needs at least one boundary vertex")
        flagged = self.graph.boundary_vertices
        unflagged = sorted(v for v in self.g if v not in flagged)
        if unflagged:
            raise InvalidBoundary(f"Vertices {unflagged[:5]} carry data but are not boundary-flagged")
        bad = sorted(v for v, value in self.g.items() if not math.isfinite(value))
        if bad:
            raise InvalidBoundary(f"Boundary data must be finite; vertices {bad[:5]} are not")
        if len(flagged) == self.graph.vertex_count:
            raise InvalidBoundary(f"{self.graph.name}: every vertex is boundary-flagged, leaving no interior")

    @property
    def boundary(self) -> FrozenSet[int]:
        return frozenset(self.g)

    def g_array(self) -> np.ndarray:
        """g on the boundary, NaN elsewhere"""
        values = np.full(self.graph.vertex_count, np.nan)
        for v, value in self.g.items():
            values[v] = value
        return values

    def with_data(self, changes: Mapping[int, float]) -> "DirichletProblem":
        """Copy with some boundary values replaced"""
        g = dict(self.g)
        g.update(changes)
        return replace(self, g=g)

    def with_field(self, f: WeightField) -> "DirichletProblem":
        return replace(self, f=f)

    @classmethod
    def constant(cls, graph: MetricGraph, f: WeightField, value: float = 0.0,
                 boundary: Optional[Sequence[int]] = None) -> "DirichletProblem":
        """g = value on the given vertices, or on every boundary-flagged vertex"""
        vertices = graph.boundary_vertices if boundary is None else boundary
        return cls(graph, f, {int(v): float(value) for v in sorted(vertices)})


@dataclass
class CompatibilityReport:
    """Pairs (x, y, g(x) - g(y) - L_f(x, y)) with a positive excess"""
    ok: bool
    violations: List[Tuple[int, int, float]]
    pairwise: bool

    @property
    def max_excess(self) -> float:
        return max((excess for _, _, excess in self.violations), default=0.0)


@dataclass
class Solution:
    """Lax solution values with effective boundary and diagnostics"""
    u: np.ndarray
    sigma_g: FrozenSet[int]
    boundary: FrozenSet[int]
    table: Optional[OpticalTable] = None
    diagnostics: Dict[str, Any] = field(default_factory=dict)
    quad: Optional[QuadratureSettings] = None

    @property
    def reduced_boundary(self) -> FrozenSet[int]:
        """Boundary vertices where the data are lost"""
        return self.boundary - self.sigma_g

    def to_frame(self, graph: MetricGraph) -> pd.DataFrame:
        """Rows vertex_id, x, y, u, in_sigma_g"""
        coords = graph.coords
        count = graph.vertex_count
        in_sigma = np.zeros(count, dtype=bool)
        in_sigma[list(self.sigma_g)] = True
        return pd.DataFrame({
            'vertex_id': np.arange(count),
            'x': coords[:, 0] if graph.ambient_dimension > 0 else np.full(count, np.nan),
            'y': coords[:, 1] if graph.ambient_dimension > 1 else np.zeros(count),
            'u': self.u,
            'in_sigma_g': in_sigma,
        })


def _default_tol(problem: DirichletProblem, quad: Optional[QuadratureSettings]) -> float:
    if problem.f.piecewise_constant:
        return get_settings().exact_tol
    quad = quad or QuadratureSettings.from_settings()
    scale = max([1.0] + [abs(value) for value in problem.g.values()])
    return 10.0 * quad.rtol * scale


def check_compatibility(problem: DirichletProblem, quad: Optional[QuadratureSettings] = None,
                        tol: Optional[float] = None, weights: Optional[np.ndarray] = None,
                        table: Optional[OpticalTable] = None) -> CompatibilityReport:
    """Check g(x) <= L_f(x, y) + g(y) over boundary pairs.

    Small boundaries are checked pair by pair. Larger ones use the Lax values:
    g(x) - u(x) is the largest excess at x, attained by the witness root of x.
    """
    graph = problem.graph
    tol = get_settings().exact_tol if tol is None else tol
    if weights is None:
        weights = edge_weights(graph, problem.f, quad)
    boundary = sorted(problem.boundary)
    violations: List[Tuple[int, int, float]] = []

    if len(boundary) <= PAIRWISE_BOUNDARY_LIMIT:
        rows = distance_matrix(graph, weights, boundary)
        for i, x in enumerate(boundary):
            for y in boundary:
                excess = problem.g[x] - problem.g[y] - float(rows[i, y])
                if excess > tol:
                    violations.append((x, y, excess))
        pairwise = True
    else:
        if table is None:
            table = optical_from_sources(graph, problem.f, boundary, problem.g, quad, weights=weights)
        for x in boundary:
            excess = problem.g[x] - float(table.dist[x])
            if excess > tol:
                violations.append((x, int(table.root[x]), excess))
        pairwise = False

    if violations:
        logger.info(f"{graph.name}: compatibility fails at {len(violations)} boundary pair(s), "
                    f"largest excess {max(v[2] for v in violations):.6g}")
    return CompatibilityReport(not violations, violations, pairwise)


def effective_boundary(problem: DirichletProblem, solution: Solution,
                       tol: Optional[float] = None) -> FrozenSet[int]:
    """Sigma_g = boundary vertices where g(y) <= u(y) + tol"""
    tol = _default_tol(problem, solution.quad) if tol is None else tol
    return frozenset(y for y in problem.boundary if problem.g[y] <= solution.u[y] + tol)


def boundary_modulus(problem: DirichletProblem, solution: Solution,
                     deltas: Sequence[float]) -> Dict[float, float]:
    """sup{|u(x) - g(y)| : y in Sigma_g, d_G(x, y) <= delta} for each delta

    Raises:
        EmptyEffectiveBoundary: If Sigma_g is empty
    """
    if not solution.sigma_g:
        raise EmptyEffectiveBoundary(f"{problem.graph.name}: no boundary vertex attains its data")
    deltas = sorted(float(d) for d in deltas)
    sigma = sorted(solution.sigma_g)
    modulus = {d: 0.0 for d in deltas}
    for start in range(0, len(sigma), CHUNK_ROWS):
        chunk = sigma[start:start + CHUNK_ROWS]
        metric = problem.graph.graph_distances(chunk, limit=deltas[-1])
        g = np.array([problem.g[y] for y in chunk])[:, None]
        with np.errstate(invalid='ignore'):
            gap = np.abs(solution.u[None, :] - g)
        for d in deltas:
            near = metric <= d
            if near.any():
                modulus[d] = max(modulus[d], float(np.max(gap[near])))
    return modulus


def continuity_modulus(graph: MetricGraph, u: np.ndarray, radii: Sequence[float],
                       budget: Optional[int] = None, seed: int = 0) -> Dict[float, float]:
    """sup{|u(x) - u(y)| : d_G(x, y) <= r}; sampled sources beyond the all-pairs limit"""
    radii = sorted(float(r) for r in radii)
    settings = get_settings()
    if graph.vertex_count <= settings.all_pairs_limit:
        sources = list(range(graph.vertex_count))
    else:
        sources = sample_vertices(range(graph.vertex_count), budget or settings.pair_budget, seed)
    modulus = {r: 0.0 for r in radii}
    u = np.asarray(u, dtype=float)
    for start in range(0, len(sources), CHUNK_ROWS):
        chunk = sources[start:start + CHUNK_ROWS]
        metric = graph.graph_distances(chunk, limit=radii[-1])
        with np.errstate(invalid='ignore'):
            gap = np.abs(u[None, :] - u[chunk][:, None])
        gap[np.isnan(gap)] = 0.0
        for r in radii:
            near = metric <= r
            if near.any():
                modulus[r] = max(modulus[r], float(np.max(gap[near])))
    return modulus


def lax_inequality_violation(problem: DirichletProblem, u: np.ndarray,
                             quad: Optional[QuadratureSettings] = None, sample: Optional[int] = 16,
                             seed: int = 0, weights: Optional[np.ndarray] = None) -> float:
    """max of u(x) - u(y) - L_f(x, y) over sampled y and all x (0 when none is positive)"""
    graph = problem.graph
    if weights is None:
        weights = edge_weights(graph, problem.f, quad)
    u = np.asarray(u, dtype=float)
    candidates = [v for v in range(graph.vertex_count) if math.isfinite(u[v])]
    worst = 0.0
    rows = sample_vertices(candidates, sample, seed)
    for start in range(0, len(rows), CHUNK_ROWS):
        chunk = rows[start:start + CHUNK_ROWS]
        optical = distance_matrix(graph, weights, chunk)
        with np.errstate(invalid='ignore'):
            excess = u[None, :] - u[chunk][:, None] - optical
        excess = excess[np.isfinite(optical) & ~np.isnan(excess)]
        if excess.size:
            worst = max(worst, float(np.max(excess)))
    return worst


def solve_lax(problem: DirichletProblem, quad: Optional[QuadratureSettings] = None,
              weights: Optional[np.ndarray] = None, deltas: Optional[Sequence[float]] = None,
              lax_sample: Optional[int] = 16, seed: int = 0) -> Solution:
    """u(x) = min over boundary y of g(y) + L_f(x, y), with diagnostics.

    When compatibility fails the solve proceeds; the data are then attained only
    on Sigma_g and the remaining boundary vertices are reported as lost.
    """
    graph = problem.graph
    quad = quad or QuadratureSettings.from_settings()
    if weights is None:
        weights = edge_weights(graph, problem.f, quad)
    table = optical_from_sources(graph, problem.f, problem.boundary, problem.g, quad, weights=weights)
    solution = Solution(u=table.dist, sigma_g=frozenset(), boundary=problem.boundary, table=table, quad=quad)
    solution.sigma_g = effective_boundary(problem, solution)

    compatibility = check_compatibility(problem, quad, _default_tol(problem, quad), weights, table)
    if solution.reduced_boundary:
        logger.warning(f"{graph.name}: boundary data lost on {len(solution.reduced_boundary)} vertex(es); "
                       f"Sigma_g keeps {len(solution.sigma_g)}")

    if deltas is None:
        settings = get_settings()
        r0 = settings.radius_fraction * optical_diameter(graph, graph.lengths)
        deltas = geometric_radii(r0, settings.radii_count)
    modulus = boundary_modulus(problem, solution, deltas)
    attained = vanishes(modulus)
    if not attained:
        logger.warning(f"{graph.name}: boundary modulus does not vanish; data attained only in the L_f sense")

    solution.diagnostics.update({
        'compatibility_ok': compatibility.ok,
        'compatibility_violations': len(compatibility.violations),
        'compatibility_max_excess': compatibility.max_excess,
        'lax_inequality_max_violation': lax_inequality_violation(
            problem, table.dist, quad, lax_sample, seed, weights),
        'boundary_modulus': modulus,
        'boundary_modulus_vanishing': attained,
        'sigma_g_size': len(solution.sigma_g),
        'infinite_vertices': int(np.sum(np.isinf(table.dist))),
    })
    logger.debug(f"{graph.name}: solved with {problem.f.name}, {solution.diagnostics['infinite_vertices']} infinite values")
    return solution
