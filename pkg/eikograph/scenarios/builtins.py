import logging
import math
from typing import Dict, List, Optional

import networkx as nx
import numpy as np

from eikograph.core.dirichlet import (
    DirichletProblem, check_compatibility, continuity_modulus, solve_lax
)
from eikograph.core.graph import (
    Edge, MetricGraph, Vertex, WeightField, build_graph, grid_domain, overlay_segment, refine, to_networkx,
    with_boundary
)
from eikograph.core.graph.builder import check_connected
from eikograph.core.monge import slope_d, verify_monge, weak_solution_check
from eikograph.core.optical import (
    check_metric_axioms, finiteness_report, topology_modulus, truncated_solve
)
from eikograph.core.optical.solver import edge_weights, label_setting
from eikograph.core.regularity import (
    estimate_Q, fit_holder, holder_pairs, lipschitz_ratio_profile, regularity_report
)
from eikograph.core.transversal import (
    NullSetMarking, maximal_optical, maximal_weak_check, optical_transversal, solve_lax_transversal,
    transversal_gap, verify_transversal_monge
)
from eikograph.core.utils import sample_vertices, sup_abs_difference
from eikograph.scenarios import tolerances as tol
from eikograph.scenarios.registry import register
from eikograph.scenarios.types import Oracle, Scenario, ScenarioRun

logger = logging.getLogger(__name__)


def _boundary_value(value: float):
    def boundary_data(graph: MetricGraph) -> Dict[int, float]:
        return {v: float(value) for v in sorted(graph.boundary_vertices)}
    return boundary_data


def _spacing(graph: MetricGraph) -> float:
    return float(graph.lengths.min())


def _sup_error(tolerance: float, provenance: str, expected: str) -> Oracle:
    """Sup-norm distance between u and the scenario's closed form on its comparison set"""
    def check(run: ScenarioRun, tolerance: float):
        exact = run.scenario.exact(run.graph)
        mask = run.scenario.error_mask(run.graph) if run.scenario.error_mask else np.ones(run.graph.vertex_count, bool)
        error = sup_abs_difference(run.u[mask], exact[mask])
        return error, error <= tolerance
    return Oracle("sup_error", provenance, expected, tolerance, check)


def _monge_report(run: ScenarioRun, key: str = "monge", **kwargs):
    if key not in run.extras:
        kwargs.setdefault("sample", tol.MONGE_SAMPLE)
        run.extras[key] = verify_monge(run.solution, run.problem, radii=run.radii,
                                       tol=run.tol or tol.MONGE_TOL, seed=run.seed,
                                       workers=run.workers, weights=run.weights, **kwargs)
    return run.extras[key]


def _monge_oracle(provenance: str = "PUBLISHED") -> Oracle:
    def check(run: ScenarioRun, tolerance: float):
        report = _monge_report(run)
        return report.pass_fraction, report.pass_fraction >= tolerance
    return Oracle("monge", provenance, "subslope within tol of 1 at sampled vertices", tol.MONGE_PASS_FRACTION, check)


def _semicontinuity_oracle() -> Oracle:
    def check(run: ScenarioRun, tolerance: float):
        report = _monge_report(run)
        return report.semicontinuity_ok, report.semicontinuity_ok
    return Oracle("semicontinuity", "DERIVED", "superslope <= subslope + tol", tol.MONGE_TOL, check)


def _lax_inequality_oracle() -> Oracle:
    def check(run: ScenarioRun, tolerance: float):
        worst = run.solution.diagnostics['lax_inequality_max_violation']
        return worst, worst <= tolerance
    return Oracle("lax_inequality", "TRIVIAL", "u(x) <= u(y) + L_f(x, y)", tol.EXACT, check)


# interval_sqrt: u(x) = 2(1 - sqrt|x|) on (-1, 1)

def _interval(name: str, bounds=(-1.0, 1.0)):
    def build(h: float) -> MetricGraph:
        return grid_domain({"kind": "interval", "bounds": list(bounds)}, h, name=name)
    return build


def _origin(graph: MetricGraph) -> int:
    return graph.nearest_vertex((0.0,) * graph.ambient_dimension)


def inverse_sqrt_field(graph: Optional[MetricGraph] = None) -> WeightField:
    """f = 1/sqrt|x_1|, in Lp for every p < 2"""
    return WeightField.from_points(lambda p: 1.0 / np.sqrt(np.abs(p[:, 0])), alpha=1.0,
                                   integrability="Lp", p=1.9, name="1/sqrt|x|")


def _sqrt_exact(graph: MetricGraph) -> np.ndarray:
    return 2.0 * (1.0 - np.sqrt(np.abs(graph.coords[:, 0])))


def _center_value(run: ScenarioRun, tolerance: float):
    value = float(run.u[_origin(run.graph)])
    return value, abs(value - 2.0) <= tolerance


def _optical_to_origin(run: ScenarioRun, tolerance: float):
    L = run.from_vertex(_origin(run.graph))
    error = sup_abs_difference(L, 2.0 * np.sqrt(np.abs(run.graph.coords[:, 0])))
    return error, error <= tolerance


def _holder_of_optical(run: ScenarioRun, tolerance: float):
    center = _origin(run.graph)
    run.pairs = holder_pairs(run.graph, run.from_vertex(center), center)
    fit = fit_holder(run.pairs)
    passed = abs(fit.exponent - 0.5) <= tolerance and abs(fit.constant - 2.0) <= tol.HOLDER_CONSTANT
    return {'exponent': fit.exponent, 'constant': fit.constant, 'pairs': fit.count}, passed


def _holder_of_solution(run: ScenarioRun, tolerance: float):
    fit = fit_holder(holder_pairs(run.graph, run.u, _origin(run.graph)))
    return fit.exponent, abs(fit.exponent - 0.5) <= tolerance


INTERVAL_Q_RADII = [0.2, 0.1, 0.05, 0.025, 0.0125]


def _interval_Q(run: ScenarioRun, tolerance: float):
    q, residual = estimate_Q(run.graph, INTERVAL_Q_RADII, seed=run.seed)
    return {'Q': q, 'residual': residual}, abs(q - 1.0) <= tolerance


def _interval_regularity(run: ScenarioRun, tolerance: float):
    report = regularity_report(run.graph, run.f, run.u, _origin(run.graph), INTERVAL_Q_RADII)
    return report.to_dict(), not report.violation


def _truncation(run: ScenarioRun, tolerance: float):
    gaps = {}
    for M in (10.0, 100.0, 1000.0):
        table = truncated_solve(run.graph, run.f, M, run.problem.boundary, run.problem.g, run.quad)
        gaps[M] = sup_abs_difference(table.dist, run.u)
    values = [gaps[M] for M in sorted(gaps)]
    decreasing = all(a > b for a, b in zip(values[:-1], values[1:]))
    matches = all(abs(gap - 1.0 / M) <= tolerance / M for M, gap in gaps.items())
    return gaps, decreasing and matches


MODULUS_RADII = [0.01, 0.02, 0.05, 0.1]


def _sqrt_modulus(run: ScenarioRun, tolerance: float):
    report = topology_modulus(run.graph, run.f, MODULUS_RADII, run.quad, weights=run.weights, seed=run.seed)
    passed = all(report.modulus[r] <= tolerance * math.sqrt(r) for r in report.radii)
    return report.modulus, passed and report.vanishing


def _metric_slope(run: ScenarioRun, tolerance: float):
    step = _spacing(run.graph) * (1 + 1e-9)
    estimate = slope_d(run.u, run.graph, run.vertex_at((0.25,)), [step * 2 ** k for k in (3, 2, 1, 0)], strict=False)
    return estimate.extrapolated, abs(estimate.extrapolated - 2.0) <= tolerance


def _weak_away_from_origin(run: ScenarioRun, tolerance: float):
    near = np.flatnonzero(np.abs(run.graph.coords[:, 0]) < 0.1)
    report = weak_solution_check(run.u, run.graph, run.f, excluded=near, tol=tolerance)
    return {'checked': report.checked, 'failures': len(report.failures)}, report.passed


def _bi_lipschitz(run: ScenarioRun, tolerance: float):
    ratio = lipschitz_ratio_profile(run.graph, run.weights, _origin(run.graph))
    expected = 2.0 / math.sqrt(_spacing(run.graph))
    return {'ratio': ratio, 'expected': expected}, abs(ratio - expected) <= tolerance * expected


@register
def interval_sqrt() -> Scenario:
    return Scenario(
        name="interval_sqrt",
        description="f = 1/sqrt|x| on (-1, 1), g = 0 at both ends",
        build=_interval("interval_sqrt"),
        weight=inverse_sqrt_field,
        boundary_data=_boundary_value(0.0),
        default_resolution=1e-3,
        exact=_sqrt_exact,
        center=_origin,
        oracles=[
            _sup_error(tol.INTERVAL_SUP_ERROR, "PUBLISHED", "2(1 - sqrt|x|)"),
            Oracle("u(0)", "PUBLISHED", "2", tol.INTERVAL_CENTER, _center_value),
            Oracle("L_f(x,0)", "PUBLISHED", "2 sqrt|x|", tol.INTERVAL_SUP_ERROR, _optical_to_origin),
            Oracle("holder_L", "PUBLISHED", "exponent 0.5, constant 2", tol.HOLDER_EXPONENT, _holder_of_optical),
            Oracle("holder_u", "DERIVED", "exponent 0.5", tol.HOLDER_EXPONENT, _holder_of_solution),
            Oracle("Q", "DERIVED", "1", tol.Q_INTERVAL, _interval_Q),
            Oracle("regularity", "PUBLISHED", "exponent not below 1 - Q/p", tol.HOLDER_EXPONENT, _interval_regularity),
            _monge_oracle(),
            _semicontinuity_oracle(),
            Oracle("truncation", "PUBLISHED", "sup|u_M - u| = 1/M, decreasing", tol.TRUNCATION_REL, _truncation),
            Oracle("topology_modulus", "DERIVED", "<= 4 sqrt(r)", tol.MODULUS_FACTOR, _sqrt_modulus),
            Oracle("slope_d(0.25)", "PUBLISHED", "2", tol.SLOPE_D, _metric_slope),
            Oracle("weak_solution", "DERIVED", "|slope_d u - f| <= tol for |x| >= 0.1", tol.WEAK_TOL,
                   _weak_away_from_origin),
            _lax_inequality_oracle(),
            Oracle("bi_lipschitz_ratio", "PUBLISHED", "2/sqrt(h)", tol.BI_LIPSCHITZ_REL, _bi_lipschitz),
        ],
        notes=["L_f is not bi-Lipschitz to d: the ratio at the origin grows like 2/sqrt(h)"],
    )


# comb: spine [O, P_1] with teeth P_j Q_j; f = 1/x on the teeth, 1 on the spine

COMB_TEETH = 50


def comb_spec(teeth: int = COMB_TEETH) -> dict:
    """Scenario description of the comb with the given number of teeth"""
    vertices = [{"id": "O", "xy": [0.0, 0.0]}]
    edges = []
    for j in range(1, teeth + 1):
        vertices.append({"id": f"P{j}", "xy": [1.0 / j, 0.0]})
        vertices.append({"id": f"Q{j}", "xy": [1.0 / j, 1.0 / j], "boundary": j == 1})
        edges.append({"u": f"P{j}", "v": f"Q{j}", "tag": "tooth"})
        edges.append({"u": f"P{j}", "v": f"P{j + 1}" if j < teeth else "O", "tag": "spine"})
    return {"name": "comb", "graph": {"vertices": vertices, "edges": edges}}


def _labelled(graph: MetricGraph, label: str) -> int:
    return next(v.id for v in graph.vertices if v.label == label)


def _build_comb(resolution: float) -> MetricGraph:
    graph = build_graph(comb_spec(), require_boundary=True)
    factor = int(math.ceil(float(graph.lengths.max()) / resolution - 1e-9))
    return refine(graph, factor) if factor >= 2 else graph


def _comb_field(graph: MetricGraph) -> WeightField:
    return WeightField.from_points(lambda p: np.where(p[:, 1] > 0, 1.0 / p[:, 0], 1.0), alpha=1.0,
                                   piecewise_constant=True, name="comb")


def _comb_exact(graph: MetricGraph) -> np.ndarray:
    x, y = graph.coords[:, 0], graph.coords[:, 1]
    with np.errstate(divide='ignore', invalid='ignore'):
        tooth = 2.0 - x + y / x
    values = np.where(y > 0, tooth, 2.0 - x)
    return np.where((y > 0) & (x >= 1.0 - 1e-12), 1.0 - y, values)


def _comb_boundary(graph: MetricGraph) -> Dict[int, float]:
    return {_labelled(graph, "Q1"): 0.0}


def _comb_pairs(graph: MetricGraph, distances: np.ndarray) -> Dict[int, float]:
    return {j: float(distances[_labelled(graph, f"Q{j}")]) for j in range(2, COMB_TEETH + 1)}


def _comb_optical(run: ScenarioRun, tolerance: float):
    L = _comb_pairs(run.graph, run.from_vertex(_labelled(run.graph, "O")))
    error = max(abs(value - (1.0 + 1.0 / j)) for j, value in L.items())
    return error, error <= tolerance


def _comb_origin(run: ScenarioRun, tolerance: float):
    value = float(run.u[_labelled(run.graph, "O")])
    return value, abs(value - 2.0) <= tolerance


def _comb_tips(run: ScenarioRun, tolerance: float):
    error = max(abs(run.u[_labelled(run.graph, f"Q{j}")] - (3.0 - 1.0 / j)) for j in range(2, COMB_TEETH + 1))
    return float(error), error <= tolerance


def _comb_radii() -> List[float]:
    return [2.0 / j * (1 + 1e-9) for j in range(2, COMB_TEETH + 1)]


def _comb_modulus(run: ScenarioRun, tolerance: float):
    report = topology_modulus(run.graph, run.f, _comb_radii(), run.quad, weights=run.weights, seed=run.seed)
    smallest = min(report.modulus.values())
    return {'min_modulus': smallest, 'vanishing': report.vanishing}, smallest >= 1.0 - tolerance


def _comb_axioms(run: ScenarioRun, tolerance: float):
    report = check_metric_axioms(run.graph, run.f, seed=run.seed, weights=run.weights)
    return len(report.violations), report.passed


def _comb_refined(run: ScenarioRun, tolerance: float):
    refined = refine(run.graph, 4)
    distances = label_setting(refined, edge_weights(refined, run.f, run.quad), [_labelled(refined, "O")])[0]
    coarse = _comb_pairs(run.graph, run.from_vertex(_labelled(run.graph, "O")))
    fine = _comb_pairs(refined, distances)
    error = max(abs(coarse[j] - fine[j]) for j in coarse)
    return error, error <= tolerance


def _comb_monge(run: ScenarioRun, tolerance: float):
    refined = refine(run.graph, 20)
    problem = DirichletProblem(refined, run.f, _comb_boundary(refined))
    solution = solve_lax(problem, run.quad)
    report = verify_monge(solution, problem, sample=tol.MONGE_SAMPLE, radii=run.radii,
                          tol=run.tol or tol.MONGE_TOL, seed=run.seed, workers=run.workers)
    passed = report.pass_fraction >= tolerance and report.semicontinuity_ok
    return {'pass_fraction': report.pass_fraction, 'semicontinuity': report.semicontinuity_ok}, passed


def _comb_Q(run: ScenarioRun, tolerance: float):
    q, residual = estimate_Q(run.graph, [0.02, 0.05, 0.1, 0.2], seed=run.seed)
    return {'Q': q, 'residual': residual}, True


def _comb_continuity(run: ScenarioRun, tolerance: float):
    modulus = continuity_modulus(run.graph, run.u, _comb_radii(), seed=run.seed)
    smallest = modulus[min(modulus)]
    return {'smallest_radius': smallest, 'largest_radius': modulus[max(modulus)]}, smallest >= tolerance


@register
def comb() -> Scenario:
    return Scenario(
        name="comb",
        description="Comb graph with 50 teeth, f = 1/x on teeth and 1 on the spine, g(Q_1) = 0",
        build=_build_comb,
        weight=_comb_field,
        boundary_data=_comb_boundary,
        default_resolution=1.0,
        exact=_comb_exact,
        center=lambda graph: _labelled(graph, "O"),
        oracles=[
            _sup_error(tol.EXACT, "PUBLISHED", "Lax formula along spine and teeth"),
            Oracle("L_f(O,Q_j)", "PUBLISHED", "1 + 1/j", tol.EXACT, _comb_optical),
            Oracle("u(O)", "PUBLISHED", "2", tol.EXACT, _comb_origin),
            Oracle("u(Q_j)", "PUBLISHED", "3 - 1/j", tol.EXACT, _comb_tips),
            Oracle("topology_modulus", "PUBLISHED", ">= 1 at r = 2/j", tol.EXACT, _comb_modulus),
            Oracle("metric_axioms", "TRIVIAL", "no violations, L_f >= alpha d", tol.EXACT, _comb_axioms),
            Oracle("refinement_invariance", "DERIVED", "L_f unchanged by refine(4)", tol.EXACT, _comb_refined),
            Oracle("monge", "PUBLISHED", "pass on refine(comb, 20)", tol.MONGE_PASS_FRACTION, _comb_monge),
            Oracle("Q", "DERIVED", "between 1 and 2", tol.Q_DISK, _comb_Q, report_only=True),
            Oracle("continuity_modulus", "PUBLISHED", "stays above 1/2 as r shrinks: u jumps at O", 0.5, _comb_continuity),
            _lax_inequality_oracle(),
        ],
        notes=["u is discontinuous at O in d but Lipschitz in L_f"],
    )


# circle: f = 1/pi on the upper arc, 1/(theta + pi) on the lower arc, g(1, 0) = 0

def _build_circle(h: float) -> MetricGraph:
    count = 2 * max(2, int(round(math.pi / h)))
    step = 2.0 * math.pi / count
    thetas = -math.pi + step * np.arange(count)
    vertices = tuple(
        Vertex(k, (math.cos(theta), math.sin(theta)), k == count // 2, f"theta{k}")
        for k, theta in enumerate(thetas)
    )
    edges = tuple(Edge(k, k, (k + 1) % count, step, step, offset=step * k) for k in range(count))
    graph = MetricGraph(vertices, edges, name="circle", ambient_dimension=2,
                        metadata={"theta": thetas, "h": step})
    check_connected(graph)
    return graph


def _circle_field(graph: MetricGraph) -> WeightField:
    return WeightField.along_curve(lambda t: np.where(t >= math.pi, 1.0 / math.pi, 1.0 / t),
                                   alpha=1.0 / math.pi, name="circle")


def _circle_exact(graph: MetricGraph, branch: float = 1.0) -> np.ndarray:
    theta = np.asarray(graph.metadata["theta"], dtype=float)
    with np.errstate(divide='ignore'):
        lower = branch * np.log(math.pi / (math.pi + theta))
    values = np.where(theta >= 0, theta / math.pi, lower)
    values[0] = 1.0
    return values


def _circle_mask(graph: MetricGraph) -> np.ndarray:
    theta = np.asarray(graph.metadata["theta"], dtype=float)
    mask = theta >= -math.pi + tol.CIRCLE_COLLAR
    mask[0] = True
    return mask


def _arc_error(upper: bool):
    def check(run: ScenarioRun, tolerance: float):
        theta = np.asarray(run.graph.metadata["theta"])
        side = (theta >= 0) if upper else ((theta < 0) & _circle_mask(run.graph))
        error = sup_abs_difference(run.u[side], _circle_exact(run.graph)[side])
        return error, error <= tolerance
    return check


def _circle_divergence(run: ScenarioRun, tolerance: float):
    h = run.graph.metadata["h"]
    expected = math.log(math.pi / h)
    observed = float(run.u[1])
    return {'u(theta_1)': observed, 'log(pi/h)': expected}, abs(observed - expected) <= tolerance * max(1.0, expected)


def _circle_singular_edge(run: ScenarioRun, tolerance: float):
    value = float(run.weights[0])
    return value, math.isinf(value)


def _outside_collar(run: ScenarioRun) -> List[int]:
    mask = _circle_mask(run.graph)
    return [v for v in np.flatnonzero(mask).tolist() if v not in run.problem.boundary]


def _circle_monge(branch: float):
    def check(run: ScenarioRun, tolerance: float):
        values = run.u if branch > 0 else _circle_exact(run.graph, branch)
        report = verify_monge(values, run.problem, sample=_outside_collar(run), radii=run.radii,
                              tol=run.tol or tol.MONGE_TOL, workers=run.workers, weights=run.weights)
        return report.pass_fraction, report.pass_fraction >= tolerance
    return check


def _circle_branch_gap(run: ScenarioRun, tolerance: float):
    mask = _circle_mask(run.graph)
    second = _circle_exact(run.graph, -1.0)
    return sup_abs_difference(run.u[mask], second[mask]), True


@register
def circle() -> Scenario:
    return Scenario(
        name="circle",
        description="Unit circle, f = 1/pi for theta in [0, pi] and 1/(theta + pi) below, g(1, 0) = 0",
        build=_build_circle,
        weight=_circle_field,
        boundary_data=lambda graph: {graph.vertex_count // 2: 0.0},
        default_resolution=2.0 * math.pi / 2000,
        exact=_circle_exact,
        error_mask=_circle_mask,
        center=lambda graph: graph.vertex_count // 2,
        oracles=[
            _sup_error(tol.CIRCLE_TOL, "PUBLISHED", "theta/pi above, log(pi/(pi + theta)) below"),
            Oracle("u_upper", "PUBLISHED", "theta/pi", tol.CIRCLE_TOL, _arc_error(True)),
            Oracle("u_lower", "PUBLISHED", "log(pi/(pi + theta)), theta >= -pi + 0.2", tol.CIRCLE_TOL, _arc_error(False)),
            Oracle("divergence", "DERIVED", "u(theta_1) = log(pi/h)", tol.CIRCLE_TOL, _circle_divergence),
            Oracle("singular_edge", "DERIVED", "edge at theta = -pi is not integrable", 0.0, _circle_singular_edge),
            Oracle("monge", "PUBLISHED", "pass outside the collar", tol.MONGE_PASS_FRACTION, _circle_monge(1.0)),
            Oracle("monge_second_branch", "PUBLISHED", "log((pi + theta)/pi) below also passes",
                   tol.MONGE_PASS_FRACTION, _circle_monge(-1.0)),
            Oracle("branch_gap", "PUBLISHED", "the two solutions differ on the lower arc", 0.0, _circle_branch_gap,
                   report_only=True),
        ],
        notes=["Both branches pass the Monge check; uniqueness fails for solutions unbounded in L_f"],
    )


# interval_loss: f = 1, g(0) = 0, g(1) = 2 on (0, 1)

def _loss_ends(graph: MetricGraph):
    return graph.nearest_vertex((0.0,)), graph.nearest_vertex((1.0,))


def _loss_boundary(graph: MetricGraph) -> Dict[int, float]:
    left, right = _loss_ends(graph)
    return {left: 0.0, right: 2.0}


def _loss_sigma(run: ScenarioRun, tolerance: float):
    left, right = _loss_ends(run.graph)
    return sorted(run.solution.sigma_g), run.solution.sigma_g == frozenset({left})


def _loss_linear(run: ScenarioRun, tolerance: float):
    excess = float(np.max(run.u - run.graph.coords[:, 0]))
    return excess, excess <= tolerance


def _loss_compatibility(run: ScenarioRun, tolerance: float):
    left, right = _loss_ends(run.graph)
    report = check_compatibility(run.problem, run.quad, weights=run.weights)
    pairs = [(x, y) for x, y, _ in report.violations]
    passed = pairs == [(right, left)] and abs(report.violations[0][2] - 1.0) <= tolerance
    return [list(v) for v in report.violations], passed


def _loss_monge(run: ScenarioRun, tolerance: float):
    report = _monge_report(run, sample=None, reduced=True)
    right = _loss_ends(run.graph)[1]
    check = report.check_for(right)
    return {'pass_fraction': report.pass_fraction, 'lost_vertex_checked': check is not None}, \
        report.passed and check is not None and check.passed


def _loss_shifted(run: ScenarioRun, tolerance: float):
    candidate = run.graph.coords[:, 0] + 1.0
    report = verify_monge(candidate, run.problem, reduced=True, tol=run.tol or tol.MONGE_TOL,
                          radii=run.radii, workers=run.workers, weights=run.weights)
    failed = sorted(c.vertex for c in report.failures)
    return failed, failed == [_loss_ends(run.graph)[0]]


def _loss_raised(run: ScenarioRun, tolerance: float):
    right = _loss_ends(run.graph)[1]
    raised = solve_lax(run.problem.with_data({right: 5.0}), run.quad, weights=run.weights)
    change = sup_abs_difference(raised.u, run.u)
    return change, change <= tolerance


@register
def interval_loss() -> Scenario:
    return Scenario(
        name="interval_loss",
        description="f = 1 on (0, 1) with incompatible data g(0) = 0, g(1) = 2",
        build=_interval("interval_loss", (0.0, 1.0)),
        weight=lambda graph: WeightField.constant(1.0),
        boundary_data=_loss_boundary,
        default_resolution=0.01,
        exact=lambda graph: graph.coords[:, 0].copy(),
        oracles=[
            _sup_error(tol.EXACT, "PUBLISHED", "u(x) = x"),
            Oracle("sigma_g", "PUBLISHED", "{0}", 0.0, _loss_sigma),
            Oracle("u(x) - x", "PUBLISHED", "<= 1e-9", tol.EXACT, _loss_linear),
            Oracle("compatibility", "PUBLISHED", "violation (1, 0) of size 1", tol.EXACT, _loss_compatibility),
            Oracle("monge_reduced", "PUBLISHED", "pass including the lost vertex 1", tol.MONGE_TOL, _loss_monge),
            Oracle("candidate_x_plus_1", "PUBLISHED", "fails the Monge check at 0 only", tol.MONGE_TOL, _loss_shifted),
            Oracle("data_outside_sigma", "DERIVED", "raising g(1) leaves u unchanged", tol.EXACT, _loss_raised),
        ],
        notes=["Data at 1 are lost; u = x attains g only on Sigma_g = {0}"],
    )


# interval_noncurve: f = 1/|x| is not integrable at 0

def inverse_distance_field(graph: Optional[MetricGraph] = None) -> WeightField:
    """f = 1/|x|, not integrable along any curve into the origin"""
    return WeightField.from_points(lambda p: 1.0 / np.linalg.norm(p, axis=1), alpha=1.0, integrability="none",
                                   name="1/|x|")


def _noncurve_exact(graph: MetricGraph) -> np.ndarray:
    with np.errstate(divide='ignore'):
        return -np.log(np.abs(graph.coords[:, 0]))


def _noncurve_optical(run: ScenarioRun, tolerance: float):
    center = _origin(run.graph)
    L = np.delete(run.from_vertex(center), center)
    return int(np.sum(np.isfinite(L))), bool(np.all(np.isinf(L)))


def _noncurve_center(run: ScenarioRun, tolerance: float):
    value = float(run.u[_origin(run.graph)])
    return value, math.isinf(value)


def _noncurve_finite(run: ScenarioRun, tolerance: float):
    report = finiteness_report(run.solution.table)
    return {'finite': report.finite, 'infinite': report.infinite}, report.infinite == 1


@register
def interval_noncurve() -> Scenario:
    return Scenario(
        name="interval_noncurve",
        description="f = 1/|x| on (-1, 1): no curve of finite cost reaches 0",
        build=_interval("interval_noncurve"),
        weight=inverse_distance_field,
        boundary_data=_boundary_value(0.0),
        default_resolution=0.01,
        exact=_noncurve_exact,
        error_mask=lambda graph: np.abs(graph.coords[:, 0]) >= 0.05,
        center=_origin,
        oracles=[
            _sup_error(tol.INTERVAL_SUP_ERROR, "DERIVED", "-log|x| for |x| >= 0.05"),
            Oracle("L_f(x,0)", "PUBLISHED", "+inf for x != 0", 0.0, _noncurve_optical),
            Oracle("u(0)", "DERIVED", "+inf", 0.0, _noncurve_center),
            Oracle("finite_elsewhere", "DERIVED", "u finite except at 0", 0.0, _noncurve_finite),
        ],
    )


# punctured_disk: f = 1/|x| off the segment e_1 = [O, (1, 0)], 1/sqrt(x_1) on it

def _build_disk(h: float) -> MetricGraph:
    graph = grid_domain({"kind": "disk", "center": [0.0, 0.0], "radius": 1.0}, h, stencil=16, name="punctured_disk")
    return overlay_segment(graph, graph.nearest_vertex((0.0, 0.0)), graph.nearest_vertex((1.0, 0.0)))


def _disk_field(graph: MetricGraph) -> WeightField:
    return WeightField.from_points(
        lambda p: 1.0 / np.linalg.norm(p, axis=1), alpha=1.0,
        tagged={"segment": lambda p: 1.0 / np.sqrt(np.abs(p[:, 0]))},
        integrability="Lp", p=1.9, name="punctured_disk",
    )


def _from_origin(run: ScenarioRun) -> np.ndarray:
    return run.from_vertex(run.vertex_at((0.0, 0.0)))


def _disk_segment(run: ScenarioRun, tolerance: float):
    value = float(_from_origin(run)[run.vertex_at((1.0, 0.0))])
    return value, abs(value - 2.0) <= tolerance


def _disk_lower(run: ScenarioRun, tolerance: float):
    L = _from_origin(run)
    values = {j: float(L[run.vertex_at((0.0, 1.0 / j))]) for j in range(1, 21)}
    smallest = min(values.values())
    return smallest, smallest >= tolerance


def _disk_upper(run: ScenarioRun, tolerance: float):
    L = _from_origin(run)
    radius = np.linalg.norm(run.graph.coords, axis=1)
    low, high = tol.DISK_SAMPLE_RADII
    pool = np.flatnonzero((radius >= low) & (radius <= high)).tolist()
    sample = sample_vertices(pool, tol.DISK_SAMPLE, run.seed)
    largest = float(np.max(L[sample]))
    return largest, largest <= math.pi + 2.0 + tolerance


def _disk_Q(run: ScenarioRun, tolerance: float):
    q, residual = estimate_Q(run.graph, [0.05, 0.1, 0.2, 0.4, 0.5], seed=run.seed)
    return {'Q': q, 'residual': residual}, abs(q - 2.0) <= tolerance


def _disk_finite(run: ScenarioRun, tolerance: float):
    report = finiteness_report(run.solution.table)
    return report.infinite, report.all_finite


@register
def punctured_disk() -> Scenario:
    return Scenario(
        name="punctured_disk",
        description="Unit disk, f = 1/|x| off e_1 and 1/sqrt(x_1) on e_1, g = 0 on the circle",
        build=_build_disk,
        weight=_disk_field,
        boundary_data=_boundary_value(0.0),
        default_resolution=0.01,
        center=lambda graph: graph.nearest_vertex((0.0, 0.0)),
        oracles=[
            Oracle("L_f(O,(1,0))", "DERIVED", "2", tol.DISK_SEGMENT, _disk_segment),
            Oracle("L_f(O,z_j)", "PUBLISHED", ">= 1/2 for j <= 20", tol.DISK_LOWER, _disk_lower),
            Oracle("L_f(O,z)", "PUBLISHED", "<= pi + 2 on sampled z", tol.DISK_UPPER_SLACK, _disk_upper),
            Oracle("Q", "DERIVED", "2", tol.Q_DISK, _disk_Q),
            Oracle("finite_everywhere", "DERIVED", "every vertex reaches the boundary at finite cost", 0.0,
                   _disk_finite),
        ],
        notes=["The segment e_1 is overlaid on the grid so the optimal path from O is representable"],
    )


# blocked_square: unit square, the vertical midline blocked except at (0.5, 0.5)

def _build_square(h: float) -> MetricGraph:
    graph = grid_domain({"kind": "rectangle", "bounds": [[0.0, 1.0], [0.0, 1.0]]}, h, stencil=8, name="blocked_square")
    left = np.flatnonzero(np.abs(graph.coords[:, 0]) < 1e-12)
    return with_boundary(graph, left.tolist())


def midline_marking(graph: MetricGraph) -> NullSetMarking:
    """Block the vertical edges on x = 0.5, leaving the vertex nearest (0.5, 0.5) passable"""
    on_line = np.abs(graph.coords[:, 0] - 0.5) < 1e-9
    ends = graph.endpoints
    blocked = np.flatnonzero(on_line[ends[:, 0]] & on_line[ends[:, 1]])
    gap = graph.nearest_vertex((0.5, 0.5))
    return NullSetMarking("midline", frozenset(blocked.tolist()), frozenset({gap}))


def _square_corners(graph: MetricGraph):
    return graph.nearest_vertex((0.0, 0.0)), graph.nearest_vertex((1.0, 0.0))


def _square_optical(run: ScenarioRun, tolerance: float):
    start, far = _square_corners(run.graph)
    plain = run.from_vertex(start)
    blocked = optical_transversal(run.graph, run.f, run.family[0], [start], quad=run.quad, weights=run.weights).dist
    ordered = bool(np.all(plain <= blocked + tolerance))
    gap = float(blocked[far] - plain[far])
    return {'far_side_gap': gap}, ordered and gap > tolerance


def _square_ordering(run: ScenarioRun, tolerance: float):
    excess = float(np.max(run.u - run.transversal.u))
    return excess, excess <= tolerance


def _square_empty_family(run: ScenarioRun, tolerance: float):
    plain = solve_lax_transversal(run.problem, [], run.quad, weights=run.weights)
    equal = bool(np.array_equal(plain.u, run.u))
    return equal, equal


def _square_brute_force(run: ScenarioRun, tolerance: float):
    marking = run.family[0]
    sealed = marking.sealed_vertices(run.graph)
    nxg = to_networkx(run.graph, marking.blocked_weights(run.weights))
    nxg.remove_nodes_from(sealed)
    lengths = nx.multi_source_dijkstra_path_length(nxg, set(run.problem.boundary))
    error = max(abs(run.transversal.u[v] - d) for v, d in lengths.items())
    return float(error), error <= tolerance


def _square_maximal(run: ScenarioRun, tolerance: float):
    start, far = _square_corners(run.graph)
    value, name = maximal_optical(run.graph, run.f, run.family, start, far, run.quad, run.weights)
    blocked = optical_transversal(run.graph, run.f, run.family[0], [start], quad=run.quad, weights=run.weights).dist
    return {'value': value, 'argmax': name}, name == "midline" and abs(value - blocked[far]) <= tolerance


def _square_gap(run: ScenarioRun, tolerance: float):
    return transversal_gap(run.u, run.transversal.u), True


def _square_monge(run: ScenarioRun, tolerance: float):
    report = verify_transversal_monge(run.transversal, run.problem, run.family, radii=run.radii,
                                      tol=run.tol or tol.MONGE_TOL, quad=run.quad, seed=run.seed,
                                      workers=run.workers, weights=run.weights)
    run.extras["transversal_monge"] = report
    return report.pass_fraction, report.pass_fraction >= tolerance


def _square_perturbed(run: ScenarioRun, tolerance: float):
    vertex = run.vertex_at((0.75, 0.25))
    values = run.transversal.u.copy()
    values[vertex] += 0.5 * _spacing(run.graph)
    report = verify_transversal_monge(values, run.problem, run.family, sample=[vertex], radii=run.radii,
                                      tol=run.tol or tol.MONGE_TOL, quad=run.quad, weights=run.weights)
    check = report.check_for(vertex)
    failed = check is not None and not check.passed
    return check.reason if check else "not checked", failed


def _square_weak(run: ScenarioRun, tolerance: float):
    u_tilde = run.transversal.u
    candidates = {
        'u_tilde': u_tilde,
        'u_tilde_minus_one': u_tilde - 1.0,
        'u_tilde_plus': u_tilde + 0.1,
        'plain_u': run.u,
    }
    report = maximal_weak_check(run.transversal, run.problem, run.family, candidates, tol=tolerance)
    passed = report.passed and sorted(report.rejected) == ['u_tilde_plus']
    return {'members': report.members, 'rejected': sorted(report.rejected)}, passed


@register
def blocked_square() -> Scenario:
    return Scenario(
        name="blocked_square",
        description="Unit square, f = 1, g = 0 on the left edge, midline blocked except one gap vertex",
        build=_build_square,
        weight=lambda graph: WeightField.constant(1.0),
        boundary_data=_boundary_value(0.0),
        default_resolution=0.05,
        null_sets=lambda graph: [midline_marking(graph)],
        center=lambda graph: graph.nearest_vertex((0.0, 0.5)),
        oracles=[
            Oracle("L_f <= L_f^N", "PUBLISHED", "ordered, strict gap at the far corner", tol.EXACT, _square_optical),
            Oracle("u <= u_tilde", "PUBLISHED", "vertexwise", tol.EXACT, _square_ordering),
            Oracle("empty_family", "TRIVIAL", "u_tilde = u bit for bit", 0.0, _square_empty_family),
            Oracle("brute_force", "DERIVED", "u_tilde = shortest paths avoiding the sealed midline", tol.EXACT,
                   _square_brute_force),
            Oracle("maximal_optical", "DERIVED", "attained by the midline marking", tol.EXACT, _square_maximal),
            Oracle("transversal_gap", "DERIVED", "reported, not asserted", 0.0, _square_gap, report_only=True),
            Oracle("transversal_monge", "DERIVED", "pass at interior vertices", tol.MONGE_PASS_FRACTION, _square_monge),
            Oracle("perturbed_monge", "DERIVED", "fails at the perturbed vertex", tol.MONGE_TOL, _square_perturbed),
            Oracle("maximal_weak", "PUBLISHED", "u_tilde dominates weak subsolutions", tol.WEAK_TOL, _square_weak),
        ],
        notes=["Sealed vertices model curves that may touch but not run along the midline"],
    )
