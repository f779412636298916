import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Collection, Dict, FrozenSet, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from eikograph.core.config import get_settings
from eikograph.core.dirichlet import DirichletProblem, Solution
from eikograph.core.graph.field import WeightField
from eikograph.core.graph.quadrature import QuadratureSettings
from eikograph.core.graph.types import MetricGraph
from eikograph.core.optical.solver import edge_weights, label_setting, optical_diameter
from eikograph.core.utils import EmptyNeighborhood, geometric_radii, sample_vertices

logger = logging.getLogger(__name__)

MODES = ("sub_f", "super_f", "full_f", "sub_d", "full_d")
# Admissible neighbours needed before a radius counts as well populated
MIN_POPULATION = 3
# Fraction of an edge's length at which one-sided vertex limits of f are sampled
VERTEX_OFFSET = 1e-6

# neighbourhood(x, radius) -> (neighbour ids, distances), x itself excluded
Neighbourhood = Callable[[int, float], Tuple[np.ndarray, np.ndarray]]


@dataclass
class SlopeEstimate:
    """Difference-quotient sups over shrinking balls around one vertex.

    ``values[i]`` is NaN when the ball of radius ``radii[i]`` holds no admissible
    neighbour; ``extrapolated`` is the value at the smallest radius with at least
    three admissible neighbours and every adjacent vertex inside (falling back to one).
    """
    vertex: int
    radii: List[float]
    values: List[float]
    counts: List[int]
    extrapolated: float
    mode: str


def ball_search(graph: MetricGraph, weights: np.ndarray,
                sealed: FrozenSet[int] = frozenset(),
                exclude: Collection[int] = frozenset()) -> Neighbourhood:
    """Neighbourhood provider backed by a cutoff label-setting search"""
    def neighbourhood(x: int, radius: float) -> Tuple[np.ndarray, np.ndarray]:
        dist = label_setting(graph, weights, [x], cutoff=radius, sealed=sealed)[0]
        mask = np.isfinite(dist)
        mask[x] = False
        if exclude:
            mask[list(exclude)] = False
        ids = np.flatnonzero(mask)
        return ids, dist[ids]

    return neighbourhood


def adjacent_vertices(graph: MetricGraph, weights: np.ndarray, x: int,
                      exclude: Collection[int] = frozenset()) -> List[int]:
    """Graph neighbours of x joined by a finite-weight edge"""
    return sorted({y for y, e in graph.adjacency[x] if math.isfinite(weights[e]) and y not in exclude})


def _quotients(u: np.ndarray, x: int, ids: np.ndarray, dists: np.ndarray, kind: str) -> np.ndarray:
    change = u[ids] - u[x]
    if kind == "sub":
        numerator = np.maximum(-change, 0.0)
    elif kind == "super":
        numerator = np.maximum(change, 0.0)
    else:
        numerator = np.abs(change)
    return numerator / dists


def estimate_slope(u: np.ndarray, x: int, neighbourhood: Neighbourhood, radii: Sequence[float],
                   mode: str, strict: bool = True, adjacent: Collection[int] = ()) -> SlopeEstimate:
    """Slope of u at x in the given mode over the provider's balls.

    A radius only counts towards the extrapolated value once its ball holds every
    listed adjacent vertex that the largest ball reaches.
    """
    if mode not in MODES:
        raise ValueError(f"Unknown slope mode '{mode}'")
    radii = sorted((float(r) for r in radii), reverse=True)
    if not radii or radii[-1] <= 0:
        raise ValueError("Radii must be positive")
    u = np.asarray(u, dtype=float)
    ids, dists = neighbourhood(x, radii[0])
    keep = np.isfinite(u[ids]) & (dists > 0)
    ids, dists = ids[keep], dists[keep]
    order = np.lexsort((ids, dists))
    ids, dists = ids[order], dists[order]

    kind = mode.split("_")[0]
    if math.isfinite(u[x]) and ids.size:
        running = np.maximum.accumulate(_quotients(u, x, ids, dists, kind))
    else:
        running = np.zeros(0)
        ids = ids[:0]
        dists = dists[:0]
    counts = np.searchsorted(dists, radii, side="right").tolist()
    values = [float(running[k - 1]) if k > 0 else math.nan for k in counts]

    if strict:
        for r, k in zip(radii, counts):
            if k == 0:
                raise EmptyNeighborhood(r, x)

    reach = 0.0
    if len(adjacent) and ids.size:
        inside = np.isin(ids, np.fromiter(adjacent, dtype=np.int64))
        if inside.any():
            reach = float(dists[inside].max())

    extrapolated = math.nan
    for threshold, needed in ((MIN_POPULATION, reach), (1, reach), (1, 0.0)):
        populated = [v for v, k, r in zip(values, counts, radii) if k >= threshold and r >= needed]
        if populated:
            extrapolated = populated[-1]
            break
    return SlopeEstimate(int(x), radii, values, counts, extrapolated, mode)


def _optical_slope(u: np.ndarray, graph: MetricGraph, f: WeightField, x: int, radii: Sequence[float],
                   mode: str, quad: Optional[QuadratureSettings], weights: Optional[np.ndarray],
                   strict: bool, exclude: Collection[int]) -> SlopeEstimate:
    if weights is None:
        weights = edge_weights(graph, f, quad)
    excluded = frozenset(int(v) for v in exclude)
    neighbourhood = ball_search(graph, weights, exclude=excluded)
    return estimate_slope(u, x, neighbourhood, radii, mode, strict,
                          adjacent_vertices(graph, weights, x, excluded))


def subslope_f(u: np.ndarray, graph: MetricGraph, f: WeightField, x: int, radii: Sequence[float],
               quad: Optional[QuadratureSettings] = None, weights: Optional[np.ndarray] = None,
               strict: bool = True, exclude: Collection[int] = ()) -> SlopeEstimate:
    """sup of (u(x) - u(y))+ / L_f(x, y) over L_f-balls

    Raises:
        EmptyNeighborhood: If ``strict`` and some ball has no admissible neighbour
    """
    return _optical_slope(u, graph, f, x, radii, "sub_f", quad, weights, strict, exclude)


def superslope_f(u: np.ndarray, graph: MetricGraph, f: WeightField, x: int, radii: Sequence[float],
                 quad: Optional[QuadratureSettings] = None, weights: Optional[np.ndarray] = None,
                 strict: bool = True, exclude: Collection[int] = ()) -> SlopeEstimate:
    """sup of (u(y) - u(x))+ / L_f(x, y) over L_f-balls"""
    return _optical_slope(u, graph, f, x, radii, "super_f", quad, weights, strict, exclude)


def full_slope_f(u: np.ndarray, graph: MetricGraph, f: WeightField, x: int, radii: Sequence[float],
                 quad: Optional[QuadratureSettings] = None, weights: Optional[np.ndarray] = None,
                 strict: bool = True, exclude: Collection[int] = ()) -> SlopeEstimate:
    return _optical_slope(u, graph, f, x, radii, "full_f", quad, weights, strict, exclude)


def slope_d(u: np.ndarray, graph: MetricGraph, x: int, radii: Sequence[float],
            strict: bool = True, exclude: Collection[int] = (), mode: str = "full_d") -> SlopeEstimate:
    """sup of |u(y) - u(x)| / d_G(x, y) (or the one-sided sub_d form) over d_G-balls.

    Excluded vertices are neither neighbours nor pass-through points.
    """
    excluded = frozenset(int(v) for v in exclude)
    neighbourhood = ball_search(graph, graph.lengths, sealed=excluded, exclude=excluded)
    return estimate_slope(u, x, neighbourhood, radii, mode, strict,
                          adjacent_vertices(graph, graph.lengths, x, excluded))


@dataclass
class VertexCheck:
    vertex: int
    sub: SlopeEstimate
    sup: SlopeEstimate
    passed: bool
    reason: str = ""


@dataclass
class MongeReport:
    """Per-vertex Monge checks: |subslope - 1| <= tol and superslope <= subslope + tol"""
    checks: List[VertexCheck]
    radii: List[float]
    tol: float
    skipped: int = 0
    kind: str = "lax"

    @property
    def checked(self) -> int:
        return len(self.checks)

    @property
    def pass_fraction(self) -> float:
        if not self.checks:
            return 0.0
        return sum(1 for c in self.checks if c.passed) / len(self.checks)

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(c.passed for c in self.checks)

    @property
    def failures(self) -> List[VertexCheck]:
        return [c for c in self.checks if not c.passed]

    @property
    def semicontinuity_ok(self) -> bool:
        """superslope <= subslope + tol wherever both are defined"""
        return all(
            not (c.sup.extrapolated > c.sub.extrapolated + self.tol)
            for c in self.checks
        )

    def check_for(self, vertex: int) -> Optional[VertexCheck]:
        return next((c for c in self.checks if c.vertex == vertex), None)

    def to_frame(self) -> pd.DataFrame:
        """Rows vertex_id, mode, radius, value, pass"""
        rows = []
        for check in self.checks:
            for estimate in (check.sub, check.sup):
                for radius, value in zip(estimate.radii, estimate.values):
                    rows.append((check.vertex, estimate.mode, radius, value, check.passed))
        return pd.DataFrame(rows, columns=['vertex_id', 'mode', 'radius', 'value', 'pass'])


def default_radii(graph: MetricGraph, weights: np.ndarray) -> List[float]:
    """Geometric schedule starting at a fraction of the optical diameter"""
    settings = get_settings()
    return geometric_radii(settings.radius_fraction * optical_diameter(graph, weights), settings.radii_count)


def _check_vertex(u: np.ndarray, x: int, neighbourhood: Neighbourhood, radii: Sequence[float],
                  tol: float, adjacent: Collection[int] = ()) -> VertexCheck:
    sub = estimate_slope(u, x, neighbourhood, radii, "sub_f", strict=False, adjacent=adjacent)
    sup = estimate_slope(u, x, neighbourhood, radii, "super_f", strict=False, adjacent=adjacent)
    if math.isnan(sub.extrapolated):
        return VertexCheck(x, sub, sup, False, "empty neighbourhood")
    if abs(sub.extrapolated - 1.0) > tol:
        return VertexCheck(x, sub, sup, False, f"subslope {sub.extrapolated:.4g}")
    if sup.extrapolated > sub.extrapolated + tol:
        return VertexCheck(x, sub, sup, False, f"superslope {sup.extrapolated:.4g} exceeds subslope")
    return VertexCheck(x, sub, sup, True)


def verify_with_neighbourhood(u: np.ndarray, checked: Sequence[int], neighbourhood: Neighbourhood,
                              radii: Sequence[float], tol: float, workers: int = 1,
                              kind: str = "lax",
                              adjacent: Optional[Callable[[int], Collection[int]]] = None) -> MongeReport:
    """Run the Monge check at each listed vertex with a shared neighbourhood provider.

    ``adjacent(x)`` lists the vertices a ball around x must hold before its radius
    counts towards the extrapolated slopes.
    """
    u = np.asarray(u, dtype=float)
    finite = [int(x) for x in checked if math.isfinite(u[x])]
    skipped = len(checked) - len(finite)

    def check(x: int) -> VertexCheck:
        return _check_vertex(u, x, neighbourhood, radii, tol, adjacent(x) if adjacent else ())

    if workers > 1 and len(finite) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            checks = list(pool.map(check, finite))
    else:
        checks = [check(x) for x in finite]
    report = MongeReport(checks, sorted(radii, reverse=True), tol, skipped, kind)
    logger.info(f"Monge check ({kind}): {report.pass_fraction:.1%} of {report.checked} vertices pass"
                + (f", {skipped} skipped with infinite values" if skipped else ""))
    for failure in report.failures[:5]:
        logger.debug(f"  vertex {failure.vertex}: {failure.reason}")
    return report


def attained_set(problem: DirichletProblem, u: np.ndarray, tol: float) -> FrozenSet[int]:
    """Boundary vertices where u equals g within tol"""
    return frozenset(y for y in problem.boundary if abs(u[y] - problem.g[y]) <= tol)


def checked_vertices(problem: DirichletProblem, solution: Union[Solution, np.ndarray],
                     reduced: bool, sample: Union[None, int, Sequence[int]], seed: int) -> List[int]:
    """Vertices a Monge check looks at.

    Plain mode skips the whole boundary. Reduced mode skips only the part of the
    boundary where the data are attained, so lost-boundary vertices are checked.
    """
    graph = problem.graph
    if reduced:
        if isinstance(solution, Solution):
            skip = solution.sigma_g
        else:
            skip = attained_set(problem, np.asarray(solution, dtype=float), get_settings().exact_tol)
    else:
        skip = problem.boundary
    pool = [v for v in range(graph.vertex_count) if v not in skip]
    if sample is None or isinstance(sample, int):
        return sample_vertices(pool, sample, seed)
    allowed = set(pool)
    return sorted(int(v) for v in sample if int(v) in allowed)


def verify_monge(solution: Union[Solution, np.ndarray], problem: DirichletProblem,
                 sample: Union[None, int, Sequence[int]] = None, radii: Optional[Sequence[float]] = None,
                 tol: Optional[float] = None, quad: Optional[QuadratureSettings] = None,
                 reduced: bool = True, seed: int = 0, workers: Optional[int] = None,
                 weights: Optional[np.ndarray] = None) -> MongeReport:
    """Check the Monge property of a solution or a candidate vertex function.

    Args:
        solution: A Solution from solve_lax, or a bare array of vertex values
        problem: The Dirichlet problem the values belong to
        sample: Number of vertices to sample, an explicit vertex list, or None for all
        radii: Ball radii in L_f units; defaults to a geometric schedule
        tol: Acceptance tolerance on the slopes
        quad: Quadrature settings for edge weights
        reduced: Check lost-boundary vertices too (see checked_vertices)
        seed: Sampling seed
        workers: Thread count for per-vertex checks

    Returns:
        MongeReport; failures are reported, never raised
    """
    settings = get_settings()
    tol = settings.monge_tol if tol is None else tol
    workers = settings.workers if workers is None else workers
    graph = problem.graph
    if weights is None:
        weights = edge_weights(graph, problem.f, quad)
    radii = list(radii) if radii is not None else default_radii(graph, weights)
    u = solution.u if isinstance(solution, Solution) else np.asarray(solution, dtype=float)
    checked = checked_vertices(problem, solution, reduced, sample, seed)
    return verify_with_neighbourhood(u, checked, ball_search(graph, weights), radii, tol, workers,
                                     adjacent=lambda x: adjacent_vertices(graph, weights, x))


@dataclass
class ComparisonReport:
    """Vertexwise ordering u_sub <= v_super + tol"""
    applicable: bool
    passed: bool
    max_violation: float
    worst_vertex: Optional[int] = None


def comparison_check(u_sub: np.ndarray, v_super: np.ndarray, boundary_ordering_ok: bool = True,
                     tol: float = 1e-9) -> ComparisonReport:
    """Check the conclusion of the comparison principle for a sub/super pair.

    The ordering is only implied when the boundary data are ordered, so without
    that the report is marked not applicable and does not pass.
    """
    u = np.asarray(u_sub, dtype=float)
    v = np.asarray(v_super, dtype=float)
    if u.shape != v.shape:
        raise ValueError(f"Shapes differ: {u.shape} vs {v.shape}")
    with np.errstate(invalid='ignore'):
        excess = u - v
    excess[np.isnan(excess)] = 0.0
    worst = int(np.argmax(excess)) if excess.size else None
    violation = max(0.0, float(excess[worst])) if worst is not None else 0.0
    if not boundary_ordering_ok:
        logger.info("Comparison check not applicable: boundary data are not ordered")
        return ComparisonReport(False, False, violation, worst)
    return ComparisonReport(True, violation <= tol, violation, worst if violation > 0 else None)


def vertex_field_values(graph: MetricGraph, f: WeightField) -> np.ndarray:
    """f at each vertex as the average of its one-sided limits along incident edges"""
    ends = graph.endpoints
    lengths = graph.lengths
    ids = np.concatenate([np.arange(graph.edge_count), np.arange(graph.edge_count)])
    s = np.concatenate([VERTEX_OFFSET * lengths, (1 - VERTEX_OFFSET) * lengths])
    owners = np.concatenate([ends[:, 0], ends[:, 1]])
    values = f.evaluate(graph, ids, s)
    totals = np.bincount(owners, weights=np.where(np.isfinite(values), values, 0.0),
                         minlength=graph.vertex_count)
    infinite = np.bincount(owners, weights=(~np.isfinite(values)).astype(float), minlength=graph.vertex_count)
    counts = np.bincount(owners, minlength=graph.vertex_count)
    with np.errstate(invalid='ignore', divide='ignore'):
        result = totals / counts
    result[infinite > 0] = np.inf
    return result


@dataclass
class WeakReport:
    """Weak-solution check |grad u| = f (or <= f) at interior vertices"""
    mode: str
    tol: float
    slopes: Dict[int, float] = field(default_factory=dict)
    targets: Dict[int, float] = field(default_factory=dict)
    failures: List[int] = field(default_factory=list)

    @property
    def checked(self) -> int:
        return len(self.slopes)

    @property
    def passed(self) -> bool:
        return bool(self.slopes) and not self.failures


def weak_solution_check(u: np.ndarray, graph: MetricGraph, f: WeightField,
                        excluded: Optional[Collection[int]] = None,
                        radii: Optional[Sequence[float]] = None, tol: float = 0.05,
                        mode: str = "full", vertices: Optional[Sequence[int]] = None) -> WeakReport:
    """Compare the metric slope of u with f at interior vertices off the excluded set.

    Full mode passes when |slope_d - f| <= tol * max(1, f); subsolution mode when
    slope_d <= f + tol * max(1, f). ``excluded`` may be a vertex collection or a
    marking exposing ``vertices(graph)``.
    """
    if mode not in ("full", "sub"):
        raise ValueError(f"Unknown weak-check mode '{mode}'")
    if excluded is not None and hasattr(excluded, "vertices"):
        excluded = excluded.vertices(graph)
    excluded = frozenset(int(v) for v in (excluded or ()))
    u = np.asarray(u, dtype=float)
    if radii is None:
        step = float(np.median(graph.lengths)) * (1 + 1e-9)
        radii = [step * 2 ** k for k in (3, 2, 1, 0)]
    targets = vertex_field_values(graph, f)
    neighbourhood = ball_search(graph, graph.lengths, sealed=excluded, exclude=excluded)
    pool = vertices if vertices is not None else range(graph.vertex_count)
    boundary = graph.boundary_vertices

    report = WeakReport(mode, tol)
    for x in pool:
        x = int(x)
        if x in boundary or x in excluded or not math.isfinite(u[x]) or not math.isfinite(targets[x]):
            continue
        adjacent = adjacent_vertices(graph, graph.lengths, x, excluded)
        slope = estimate_slope(u, x, neighbourhood, radii, "full_d", strict=False, adjacent=adjacent).extrapolated
        if math.isnan(slope):
            continue
        target = float(targets[x])
        allowance = tol * max(1.0, target)
        report.slopes[x] = slope
        report.targets[x] = target
        ok = slope <= target + allowance if mode == "sub" else abs(slope - target) <= allowance
        if not ok:
            report.failures.append(x)

    logger.info(f"Weak {mode} check: {report.checked - len(report.failures)} of {report.checked} vertices pass")
    return report
