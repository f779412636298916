import logging
import math
import time
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from eikograph.core.config import get_settings
from eikograph.core.dirichlet import DirichletProblem, solve_lax
from eikograph.core.graph import MetricGraph, QuadratureSettings, refine
from eikograph.core.monge import MongeReport
from eikograph.core.optical import edge_weights
from eikograph.core.regularity import holder_pairs
from eikograph.core.reports import pairs_frame, write_frame, write_report
from eikograph.core.transversal import NullSetMarking, solve_lax_transversal
from eikograph.core.utils import EikographError, sup_abs_difference
from eikograph.scenarios.registry import get_scenario
from eikograph.scenarios.types import QuantityResult, Scenario, ScenarioReport, ScenarioRun

logger = logging.getLogger(__name__)

# markings, or a function building them on the graph actually solved (after refinement)
NullSetSource = Union[Sequence[NullSetMarking], Callable[[MetricGraph], Sequence[NullSetMarking]]]


def _evaluate(run: ScenarioRun) -> List[QuantityResult]:
    """Run every oracle; an oracle that raises counts as failed with the error as detail"""
    results = []
    for oracle in run.scenario.oracles:
        try:
            observed, passed = oracle.check(run, oracle.tolerance)
            detail = ""
        except EikographError as e:
            observed, passed, detail = None, False, f"{type(e).__name__}: {e}"
            logger.error(f"{run.scenario.name}: oracle '{oracle.quantity}' raised {detail}")
        results.append(QuantityResult(
            quantity=oracle.quantity,
            provenance=oracle.provenance,
            expected=oracle.expected,
            observed=observed,
            tolerance=oracle.tolerance,
            passed=True if oracle.report_only else bool(passed),
            report_only=oracle.report_only,
            detail=detail,
        ))
    return results


def prepare_run(scenario: Scenario, resolution: Optional[float] = None,
                quad: Optional[QuadratureSettings] = None, *,
                refine_factor: Optional[int] = None, truncate_M: Optional[float] = None,
                null_sets: Optional[NullSetSource] = None,
                radii: Optional[Sequence[float]] = None, tol: Optional[float] = None,
                workers: Optional[int] = None, seed: Optional[int] = None) -> ScenarioRun:
    """Build the graph, solve the Dirichlet problem and collect what the oracles need"""
    settings = get_settings()
    resolution = scenario.default_resolution if resolution is None else float(resolution)
    graph = scenario.build(resolution)
    if refine_factor and refine_factor >= 2:
        graph = refine(graph, refine_factor)

    f = scenario.weight(graph)
    if truncate_M is not None and math.isfinite(truncate_M):
        f = f.truncated(truncate_M)
    problem = DirichletProblem(graph, f, scenario.boundary_data(graph))
    quad = quad or scenario.quad or QuadratureSettings.from_settings(settings)
    seed = settings.seed if seed is None else seed

    weights = edge_weights(graph, f, quad)
    solution = solve_lax(problem, quad, weights=weights, seed=seed)

    if null_sets is None:
        null_sets = scenario.null_sets
    family = list(null_sets(graph)) if callable(null_sets) else list(null_sets)
    transversal = solve_lax_transversal(problem, family, quad, weights=weights) if family else None

    return ScenarioRun(
        scenario=scenario,
        resolution=resolution,
        graph=graph,
        f=f,
        problem=problem,
        quad=quad,
        weights=weights,
        solution=solution,
        family=family,
        transversal=transversal,
        seed=seed,
        workers=settings.workers if workers is None else workers,
        tol=tol,
        radii=list(radii) if radii is not None else None,
    )


def _write_artifacts(run: ScenarioRun, report: ScenarioReport, out_dir: Path) -> None:
    name = run.scenario.name
    graph = run.graph
    report.artifacts['solution'] = str(write_frame(run.solution.to_frame(graph), out_dir / f"{name}_solution.csv"))

    pairs = run.pairs
    quantity = "L"
    if pairs is None and math.isfinite(run.u[run.scenario.center(graph)]):
        pairs = holder_pairs(graph, run.u, run.scenario.center(graph))
        quantity = "u"
    if pairs is not None:
        report.artifacts['pairs'] = str(write_frame(pairs_frame(pairs, quantity), out_dir / f"{name}_pairs.csv"))

    if run.transversal is not None:
        path = out_dir / f"{name}_transversal.csv"
        report.artifacts['transversal'] = str(write_frame(run.transversal.to_frame(graph), path))
    monge = run.extras.get("monge")
    if isinstance(monge, MongeReport):
        report.artifacts['monge'] = str(write_frame(monge.to_frame(), out_dir / f"{name}_monge.csv"))

    report.artifacts['report'] = str(write_report(report.to_dict(), out_dir / f"{name}_report.json"))


def run_scenario(scenario: Union[str, Scenario], resolution: Optional[float] = None,
                 quad: Optional[QuadratureSettings] = None, out_dir: Union[None, str, Path] = None, *,
                 refine_factor: Optional[int] = None, truncate_M: Optional[float] = None,
                 null_sets: Optional[NullSetSource] = None,
                 radii: Optional[Sequence[float]] = None, tol: Optional[float] = None,
                 workers: Optional[int] = None, seed: Optional[int] = None,
                 write: bool = True) -> ScenarioReport:
    """Build, solve and verify a scenario, comparing every oracle quantity.

    Args:
        scenario: A registered scenario name or a Scenario object
        resolution: Grid spacing (or largest edge length); the scenario default when None
        quad: Quadrature settings; the scenario's own or the configured defaults when None
        out_dir: Directory for <name>_solution.csv, <name>_report.json and <name>_pairs.csv
        null_sets: Markings replacing the scenario's own, or a function of the refined graph returning them
        write: Skip artifact files when False

    Raises:
        UnknownScenario: If a name is given that is not registered
    """
    if isinstance(scenario, str):
        scenario = get_scenario(scenario)
    started = time.perf_counter()
    run = prepare_run(scenario, resolution, quad, refine_factor=refine_factor, truncate_M=truncate_M,
                      null_sets=null_sets, radii=radii, tol=tol, workers=workers, seed=seed)
    results = _evaluate(run)

    diagnostics = dict(run.solution.diagnostics)
    diagnostics.update({
        'field': run.f.name,
        'integrability': run.f.tag,
        'quadrature': run.quad.describe(),
        'seed': run.seed,
        'sigma_g': sorted(run.solution.sigma_g),
        'reduced_boundary': sorted(run.solution.reduced_boundary),
    })
    if run.transversal is not None:
        diagnostics['transversal'] = dict(run.transversal.diagnostics)
    report = ScenarioReport(
        name=scenario.name,
        resolution=run.resolution,
        vertices=run.graph.vertex_count,
        edges=run.graph.edge_count,
        results=results,
        diagnostics=diagnostics,
        notes=list(scenario.notes),
    )

    if write:
        _write_artifacts(run, report, Path(out_dir or get_settings().output_dir))
    report.runtime = time.perf_counter() - started

    for result in results:
        mark = "📝" if result.report_only else ("✅" if result.passed else "❌")
        logger.info(f"  {mark} {result.quantity:<22} expected {result.expected}, observed {result.observed}")
    status = "passed" if report.passed else f"failed {len(report.failures)} check(s)"
    logger.info(f"{scenario.name}: {status} ({report.vertices} vertices, {report.runtime:.2f}s)")
    return report


def convergence(scenario: Union[str, Scenario], hs: Sequence[float],
                quad: Optional[QuadratureSettings] = None) -> pd.DataFrame:
    """Sup error against the closed form at each resolution.

    The quadrature tolerance shrinks in proportion to h so quadrature error does
    not mask discretisation error.

    Raises:
        ValueError: If the scenario has no closed-form solution
    """
    if isinstance(scenario, str):
        scenario = get_scenario(scenario)
    if scenario.exact is None:
        raise ValueError(f"Scenario '{scenario.name}' has no closed form to converge to")
    base = quad or scenario.quad or QuadratureSettings.from_settings()
    coarsest = max(hs)
    rows = []
    for h in sorted(hs, reverse=True):
        step_quad = base.with_rtol(base.rtol * h / coarsest)
        graph = scenario.build(h)
        f = scenario.weight(graph)
        problem = DirichletProblem(graph, f, scenario.boundary_data(graph))
        solution = solve_lax(problem, step_quad, lax_sample=0)
        mask = scenario.error_mask(graph) if scenario.error_mask else np.ones(graph.vertex_count, bool)
        error = sup_abs_difference(solution.u[mask], scenario.exact(graph)[mask])
        rows.append({'h': h, 'vertices': graph.vertex_count, 'sup_error': error, 'rtol': step_quad.rtol})
        logger.info(f"{scenario.name}: h={h:g} sup error {error:.6g}")
    return pd.DataFrame(rows, columns=['h', 'vertices', 'sup_error', 'rtol'])
