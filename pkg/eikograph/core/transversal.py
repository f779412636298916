import logging
import math
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from eikograph.core.config import get_settings
from eikograph.core.dirichlet import DirichletProblem, Solution, effective_boundary, solve_lax
from eikograph.core.graph.field import WeightField
from eikograph.core.graph.quadrature import QuadratureSettings
from eikograph.core.graph.types import MetricGraph
from eikograph.core.monge import (
    MongeReport, WeakReport, adjacent_vertices, checked_vertices, default_radii, verify_monge,
    verify_with_neighbourhood, weak_solution_check
)
from eikograph.core.optical.solver import OpticalTable, edge_weights, label_setting, optical_from_sources
from eikograph.core.utils import InvalidMarking, MissingLinfTag, sup_abs_difference

logger = logging.getLogger(__name__)

COMBINE_MODES = ("pairwise", "per_marking")


@dataclass(frozen=True)
class NullSetMarking:
    """Edges declared to carry no measure, which transversal curves may only touch at endpoints.

    Endpoints of blocked edges are sealed (a path may start or end there but not
    pass through) unless listed as passable.
    """
    name: str
    blocked_edges: FrozenSet[int] = frozenset()
    passable_vertices: FrozenSet[int] = frozenset()
    declared_null: bool = True

    def validate(self, graph: MetricGraph) -> None:
        bad_edges = sorted(e for e in self.blocked_edges if not 0 <= e < graph.edge_count)
        if bad_edges:
            raise InvalidMarking(f"Marking '{self.name}' blocks unknown edges {bad_edges[:5]}")
        bad_vertices = sorted(v for v in self.passable_vertices if not 0 <= v < graph.vertex_count)
        if bad_vertices:
            raise InvalidMarking(f"Marking '{self.name}' lists unknown vertices {bad_vertices[:5]}")
        if not self.declared_null:
            logger.warning(f"Marking '{self.name}' is not declared null; transversal results may not model a null set")

    def sealed_vertices(self, graph: MetricGraph) -> FrozenSet[int]:
        ends = graph.endpoints[sorted(self.blocked_edges)].ravel().tolist() if self.blocked_edges else []
        return frozenset(ends) - self.passable_vertices

    def vertices(self, graph: MetricGraph) -> FrozenSet[int]:
        """Every vertex inside the marked set, passable or not"""
        return self.sealed_vertices(graph) | self.passable_vertices

    def blocked_weights(self, weights: np.ndarray) -> np.ndarray:
        blocked = np.array(weights, dtype=float, copy=True)
        if self.blocked_edges:
            blocked[sorted(self.blocked_edges)] = np.inf
        return blocked

    @classmethod
    def empty(cls, name: str = "empty") -> "NullSetMarking":
        return cls(name)


def optical_transversal(graph: MetricGraph, f: WeightField, marking: NullSetMarking,
                        sources: Iterable[int], initial: Optional[Mapping[int, float]] = None,
                        quad: Optional[QuadratureSettings] = None,
                        weights: Optional[np.ndarray] = None) -> OpticalTable:
    """Optical distances restricted to curves transversal to the marking"""
    marking.validate(graph)
    if weights is None:
        weights = edge_weights(graph, f, quad)
    table = optical_from_sources(graph, f, sources, initial, quad,
                                 weights=marking.blocked_weights(weights),
                                 sealed=marking.sealed_vertices(graph))
    table.meta['marking'] = marking.name
    return table


def _with_empty(family: Sequence[NullSetMarking]) -> List[NullSetMarking]:
    return [NullSetMarking.empty()] + list(family)


def maximal_optical(graph: MetricGraph, f: WeightField, family: Sequence[NullSetMarking],
                    x: int, y: int, quad: Optional[QuadratureSettings] = None,
                    weights: Optional[np.ndarray] = None) -> Tuple[float, Optional[str]]:
    """max of L_f^N(x, y) over the family and the empty marking.

    This bounds the supremum over all null sets from below. The second element
    names the maximising marking, or None when plain L_f already attains it.
    """
    if weights is None:
        weights = edge_weights(graph, f, quad)
    best, best_name = -math.inf, None
    for marking in _with_empty(family):
        marking.validate(graph)
        dist = label_setting(graph, marking.blocked_weights(weights), [x],
                             sealed=marking.sealed_vertices(graph), target=y)[0]
        if dist[y] > best:
            best = float(dist[y])
            best_name = marking.name if marking.blocked_edges or marking.passable_vertices else None
    return best, best_name


def transversal_gap(u: np.ndarray, u_tilde: np.ndarray) -> float:
    """sup |u_tilde - u| over vertices where both are finite"""
    return sup_abs_difference(u_tilde, u)


def solve_lax_transversal(problem: DirichletProblem, family: Sequence[NullSetMarking],
                          quad: Optional[QuadratureSettings] = None, combine: str = "pairwise",
                          weights: Optional[np.ndarray] = None) -> Solution:
    """Maximal solution u~(x) = min over boundary y of g(y) + max_N L_f^N(x, y).

    ``pairwise`` evaluates that formula from one table per boundary vertex and
    marking. ``per_marking`` takes the vertexwise max of per-marking Lax solves,
    which is cheaper and never exceeds the pairwise value. An empty family returns
    the plain Lax solution.
    """
    if combine not in COMBINE_MODES:
        raise ValueError(f"combine must be one of {COMBINE_MODES}, got '{combine}'")
    graph = problem.graph
    quad = quad or QuadratureSettings.from_settings()
    if weights is None:
        weights = edge_weights(graph, problem.f, quad)
    plain = solve_lax(problem, quad, weights=weights)
    if not family:
        plain.diagnostics.update({'family': [], 'combine': combine, 'transversal_gap': 0.0})
        return plain

    for marking in family:
        marking.validate(graph)
    markings = _with_empty(family)
    if combine == "pairwise":
        u_tilde = np.full(graph.vertex_count, np.inf)
        for y in sorted(problem.boundary):
            longest = np.zeros(graph.vertex_count)
            for marking in markings:
                dist = label_setting(graph, marking.blocked_weights(weights), [y],
                                     sealed=marking.sealed_vertices(graph))[0]
                longest = np.maximum(longest, dist)
            u_tilde = np.minimum(u_tilde, problem.g[y] + longest)
    else:
        u_tilde = plain.u.copy()
        for marking in family:
            table = optical_transversal(graph, problem.f, marking, problem.boundary, problem.g, quad, weights)
            u_tilde = np.maximum(u_tilde, table.dist)

    solution = Solution(u=u_tilde, sigma_g=frozenset(), boundary=problem.boundary, quad=quad)
    solution.sigma_g = effective_boundary(problem, solution)
    gap = transversal_gap(plain.u, u_tilde)
    solution.diagnostics.update({
        'family': [m.name for m in family],
        'combine': combine,
        'transversal_gap': gap,
        'plain_sigma_g_size': len(plain.sigma_g),
        'sigma_g_size': len(solution.sigma_g),
        'infinite_vertices': int(np.sum(np.isinf(u_tilde))),
    })
    logger.info(f"{graph.name}: maximal solution over {len(family)} marking(s), gap to plain solution {gap:.6g}")
    return solution


def _transversal_neighbourhood(graph: MetricGraph, weights: np.ndarray, family: Sequence[NullSetMarking],
                               exclude: FrozenSet[int]):
    """Balls in the max-over-family metric: y is inside when every marking's distance is within r"""
    layers = [(m.blocked_weights(weights), m.sealed_vertices(graph)) for m in _with_empty(family)]

    def neighbourhood(x: int, radius: float) -> Tuple[np.ndarray, np.ndarray]:
        longest = np.zeros(graph.vertex_count)
        for layer_weights, sealed in layers:
            dist = label_setting(graph, layer_weights, [x], cutoff=radius, sealed=sealed)[0]
            longest = np.maximum(longest, dist)
        mask = np.isfinite(longest)
        mask[x] = False
        if exclude:
            mask[list(exclude)] = False
        ids = np.flatnonzero(mask)
        return ids, longest[ids]

    return neighbourhood


def verify_transversal_monge(solution: Union[Solution, np.ndarray], problem: DirichletProblem,
                             family: Sequence[NullSetMarking], sample: Union[None, int, Sequence[int]] = None,
                             radii: Optional[Sequence[float]] = None, tol: Optional[float] = None,
                             quad: Optional[QuadratureSettings] = None, reduced: bool = True,
                             seed: int = 0, workers: Optional[int] = None,
                             weights: Optional[np.ndarray] = None) -> MongeReport:
    """verify_monge with difference quotients taken in the maximal optical length.

    Sealed vertices lie inside the null set and are neither checked nor used as
    neighbours. An empty family gives exactly the verify_monge report.
    """
    if not family:
        return verify_monge(solution, problem, sample, radii, tol, quad, reduced, seed, workers, weights)
    settings = get_settings()
    tol = settings.monge_tol if tol is None else tol
    workers = settings.workers if workers is None else workers
    graph = problem.graph
    if weights is None:
        weights = edge_weights(graph, problem.f, quad)
    radii = list(radii) if radii is not None else default_radii(graph, weights)
    sealed = frozenset().union(*(m.sealed_vertices(graph) for m in family))
    u = solution.u if isinstance(solution, Solution) else np.asarray(solution, dtype=float)
    checked = [v for v in checked_vertices(problem, solution, reduced, sample, seed) if v not in sealed]
    neighbourhood = _transversal_neighbourhood(graph, weights, family, sealed)
    open_weights = weights
    for marking in family:
        open_weights = marking.blocked_weights(open_weights)
    return verify_with_neighbourhood(u, checked, neighbourhood, radii, tol, workers, kind="transversal",
                                     adjacent=lambda x: adjacent_vertices(graph, open_weights, x, sealed))


@dataclass
class MaximalWeakReport:
    """Maximal weak-subsolution checks for u~ against candidate functions"""
    self_check: WeakReport
    members: Dict[str, bool] = field(default_factory=dict)
    dominated: Dict[str, bool] = field(default_factory=dict)
    rejected: Dict[str, str] = field(default_factory=dict)
    max_excess: Dict[str, float] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.self_check.passed and all(self.dominated.values())


def maximal_weak_check(solution: Solution, problem: DirichletProblem, family: Sequence[NullSetMarking],
                       candidates: Optional[Mapping[str, np.ndarray]] = None,
                       radii: Optional[Sequence[float]] = None, tol: float = 0.05) -> MaximalWeakReport:
    """Check that u~ is a weak subsolution off the markings and dominates every other one.

    A candidate belongs to the weak-subsolution class when it passes the
    subsolution-mode weak check off the markings and stays below g on the boundary;
    members must then satisfy v <= u~ + tol. Non-members are reported as rejected.

    Raises:
        MissingLinfTag: If f is not declared bounded
    """
    graph, f = problem.graph, problem.f
    if f.integrability != "Linf":
        raise MissingLinfTag(f"{f.name} is tagged {f.tag}; the maximal weak check needs a bounded f")
    excluded = frozenset().union(*(m.vertices(graph) for m in family)) if family else frozenset()
    u_tilde = np.asarray(solution.u, dtype=float)
    report = MaximalWeakReport(weak_solution_check(u_tilde, graph, f, excluded, radii, tol, mode="sub"))

    for name, values in (candidates or {}).items():
        v = np.asarray(values, dtype=float)
        above = [y for y in sorted(problem.boundary) if v[y] > problem.g[y] + tol]
        if above:
            report.members[name] = False
            report.rejected[name] = f"exceeds boundary data at {len(above)} vertex(es), first {above[0]}"
            continue
        weak = weak_solution_check(v, graph, f, excluded, radii, tol, mode="sub")
        if not weak.passed:
            report.members[name] = False
            report.rejected[name] = f"fails the weak subsolution test at {len(weak.failures)} vertex(es)"
            continue
        report.members[name] = True
        with np.errstate(invalid='ignore'):
            excess = v - u_tilde
        excess = excess[np.isfinite(excess)]
        worst = float(excess.max()) if excess.size else 0.0
        report.max_excess[name] = worst
        report.dominated[name] = worst <= tol

    for name, reason in report.rejected.items():
        logger.info(f"Candidate '{name}' rejected: {reason}")
    return report
