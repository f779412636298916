import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Mapping, Sequence, Union

import numpy as np

from eikograph.core.graph import MetricGraph, WeightField, build_graph, grid_domain, refine, with_boundary
from eikograph.core.graph.builder import check_connected
from eikograph.core.monge import verify_monge
from eikograph.core.dirichlet import check_compatibility
from eikograph.core.transversal import NullSetMarking, transversal_gap
from eikograph.core.utils import ParseError
from eikograph.scenarios import tolerances as tol
from eikograph.scenarios.builtins import inverse_distance_field, inverse_sqrt_field
from eikograph.scenarios.types import Oracle, Scenario, ScenarioRun

logger = logging.getLogger(__name__)

BUILTIN_FIELDS = ("constant", "inverse_sqrt", "inverse_distance")


def _read_json(path: Path) -> Dict[str, Any]:
    with open(path, "r", encoding="utf-8") as f:
        text = f.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON: {e.msg}", f"line {e.lineno}, column {e.colno}") from e
    if not isinstance(data, dict):
        raise ParseError("expected a JSON object at the top level", str(path))
    return data


def _number(value: Any, location: str) -> float:
    try:
        return float(value)
    except (TypeError, ValueError) as e:
        raise ParseError(f"expected a number, got {value!r}", location) from e


def _field_from_spec(spec: Mapping[str, Any]) -> WeightField:
    """Weight field from the "f" block: expression, builtin or per_edge"""
    kind = spec.get("kind", "expression")
    extra = {key: spec[key] for key in ("integrability", "p", "sup_bound", "name") if key in spec}
    try:
        if kind == "expression":
            if "expr" not in spec:
                raise ParseError("missing required field 'expr'", "f")
            return WeightField.from_expression(str(spec["expr"]), _number(spec.get("alpha", 1.0), "f.alpha"), **extra)
        if kind == "per_edge":
            values = spec.get("values")
            if not isinstance(values, list) or not values:
                raise ParseError("expected a nonempty list of edge values", "f.values")
            return WeightField.per_edge({i: _number(v, f"f.values[{i}]") for i, v in enumerate(values)}, **extra)
        if kind == "builtin":
            name = spec.get("name")
            if name == "constant":
                return WeightField.constant(_number(spec.get("value", 1.0), "f.value"))
            if name == "inverse_sqrt":
                return inverse_sqrt_field()
            if name == "inverse_distance":
                return inverse_distance_field()
            raise ParseError(f"unknown builtin field {name!r}; expected one of {', '.join(BUILTIN_FIELDS)}", "f.name")
    except ValueError as e:
        raise ParseError(str(e), "f") from e
    raise ParseError(f"unknown field kind {kind!r}", "f.kind")


def _vertex_ref(graph: MetricGraph, item: Mapping[str, Any], location: str) -> int:
    """Resolve {"vertex": label} or {"at": [x, y]} to a vertex id"""
    if "vertex" in item:
        label = str(item["vertex"])
        for vertex in graph.vertices:
            if vertex.label == label:
                return vertex.id
        if label.isdigit() and int(label) < graph.vertex_count:
            return int(label)
        raise ParseError(f"unknown vertex {item['vertex']!r}", f"{location}.vertex")
    if "at" in item:
        return graph.nearest_vertex([_number(c, f"{location}.at") for c in item["at"]])
    raise ParseError("expected 'vertex' or 'at'", location)


def _boundary_data(spec: Any):
    def boundary_data(graph: MetricGraph) -> Dict[int, float]:
        if isinstance(spec, Mapping):
            value = _number(spec.get("value", 0.0), "g.value")
            return {v: value for v in sorted(graph.boundary_vertices)}
        if not isinstance(spec, list) or not spec:
            raise ParseError("expected an object or a nonempty list", "g")
        data = {}
        for i, item in enumerate(spec):
            data[_vertex_ref(graph, item, f"g[{i}]")] = _number(item.get("value"), f"g[{i}].value")
        return data
    return boundary_data


def _segment_edges(graph: MetricGraph, segment: Sequence[Sequence[float]], location: str) -> List[int]:
    """Edges with both endpoints on the closed segment"""
    try:
        a, b = (np.asarray(p, dtype=float) for p in segment)
    except (TypeError, ValueError) as e:
        raise ParseError(f"expected [[x0, y0], [x1, y1]]: {e}", location) from e
    span = float(np.linalg.norm(b - a))
    if span == 0:
        raise ParseError("segment endpoints coincide", location)
    unit = (b - a) / span
    relative = graph.coords - a
    along = relative @ unit
    across = np.linalg.norm(relative - np.outer(along, unit), axis=1)
    slack = 1e-9 * max(1.0, span)
    on = (across <= slack) & (along >= -slack) & (along <= span + slack)
    ends = graph.endpoints
    return np.flatnonzero(on[ends[:, 0]] & on[ends[:, 1]]).tolist()


def parse_null_sets(items: Any, graph: MetricGraph, location: str = "null_sets") -> List[NullSetMarking]:
    """Markings from a "null_sets" array of {name, blocked_edges, passable_vertices}"""
    if not isinstance(items, list):
        raise ParseError("expected a list", location)
    markings = []
    for i, item in enumerate(items):
        here = f"{location}[{i}]"
        blocked = set()
        for j, entry in enumerate(item.get("blocked_edges", [])):
            if isinstance(entry, Mapping) and "segment" in entry:
                blocked.update(_segment_edges(graph, entry["segment"], f"{here}.blocked_edges[{j}]"))
            elif isinstance(entry, int):
                blocked.add(entry)
            else:
                raise ParseError(f"expected an edge id or a segment, got {entry!r}", f"{here}.blocked_edges[{j}]")
        passable = set()
        for j, entry in enumerate(item.get("passable_vertices", [])):
            if isinstance(entry, int):
                passable.add(entry)
            else:
                passable.add(graph.nearest_vertex([_number(c, f"{here}.passable_vertices[{j}]") for c in entry]))
        markings.append(NullSetMarking(str(item.get("name", f"marking{i}")), frozenset(blocked), frozenset(passable),
                                       bool(item.get("declared_null", True))))
    return markings


def _graph_builder(data: Mapping[str, Any]):
    name = str(data.get("name", "scenario"))
    boundary = data.get("boundary")
    factor = int(_number(data.get("refine", 1), "refine"))

    def build(resolution: float) -> MetricGraph:
        if "grid" in data:
            grid = data["grid"]
            graph = grid_domain(grid.get("domain", {}), resolution, int(grid.get("stencil", 8)), name=name)
        else:
            graph = build_graph(data)
        if factor >= 2:
            graph = refine(graph, factor)
        if boundary is not None:
            ids = [_vertex_ref(graph, item, f"boundary[{i}]") for i, item in enumerate(boundary)]
            graph = with_boundary(graph, ids)
            check_connected(graph)
        return graph

    return build


def _expected_oracle(items: List[Mapping[str, Any]]) -> Oracle:
    def check(run: ScenarioRun, tolerance: float):
        worst = 0.0
        passed = True
        for i, item in enumerate(items):
            vertex = _vertex_ref(run.graph, item, f"expected[{i}]")
            value = _number(item.get("value"), f"expected[{i}].value")
            error = abs(float(run.u[vertex]) - value) if math.isfinite(value) else (0.0 if math.isinf(run.u[vertex]) else math.inf)
            worst = max(worst, error)
            passed &= error <= float(item.get("tol", tolerance))
        return worst, passed
    return Oracle("expected_values", "DERIVED", "values listed in the file", tol.EXACT, check)


def _generic_oracles(has_family: bool) -> List[Oracle]:
    def lax(run: ScenarioRun, tolerance: float):
        worst = run.solution.diagnostics['lax_inequality_max_violation']
        return worst, worst <= tolerance

    def sigma(run: ScenarioRun, tolerance: float):
        return len(run.solution.sigma_g), bool(run.solution.sigma_g)

    def monge(run: ScenarioRun, tolerance: float):
        report = verify_monge(run.solution, run.problem, sample=tol.MONGE_SAMPLE, radii=run.radii,
                              tol=run.tol or tol.MONGE_TOL, seed=run.seed, workers=run.workers,
                              weights=run.weights, reduced=True)
        run.extras["monge"] = report
        return report.pass_fraction, report.pass_fraction >= tolerance

    def compatibility(run: ScenarioRun, tolerance: float):
        report = check_compatibility(run.problem, run.quad, weights=run.weights, table=run.solution.table)
        return [list(v) for v in report.violations[:10]], report.ok

    def gap(run: ScenarioRun, tolerance: float):
        return transversal_gap(run.u, run.transversal.u), True

    oracles = [
        Oracle("lax_inequality", "TRIVIAL", "u(x) <= u(y) + L_f(x, y)", tol.EXACT, lax),
        Oracle("sigma_g", "TRIVIAL", "nonempty", 0.0, sigma),
        Oracle("monge", "DERIVED", "reduced Monge check passes", tol.MONGE_PASS_FRACTION, monge),
        Oracle("compatibility", "TRIVIAL", "g(x) <= L_f(x, y) + g(y)", tol.EXACT, compatibility, report_only=True),
    ]
    if has_family:
        oracles.append(Oracle("transversal_gap", "DERIVED", "reported, not asserted", 0.0, gap, report_only=True))
    return oracles


def scenario_from_dict(data: Mapping[str, Any], source: str = "<dict>") -> Scenario:
    """Scenario from a parsed scenario description"""
    if "graph" not in data and "grid" not in data:
        raise ParseError("missing required field 'graph' (or 'grid')", "")
    if "f" not in data:
        raise ParseError("missing required field 'f'", "")
    if "g" not in data:
        raise ParseError("missing required field 'g'", "")

    build = _graph_builder(data)
    if "grid" in data:
        if "h" not in data["grid"]:
            raise ParseError("missing required field 'h'", "grid")
        resolution = _number(data["grid"]["h"], "grid.h")
    else:
        resolution = 1.0
    # Validate the graph, field and data now so errors carry file locations
    graph = build(resolution)
    f = _field_from_spec(data["f"])
    boundary_data = _boundary_data(data["g"])
    boundary_data(graph)
    null_items = data.get("null_sets", [])
    parse_null_sets(null_items, graph)

    oracles = _generic_oracles(bool(null_items))
    if data.get("expected"):
        oracles.insert(0, _expected_oracle(list(data["expected"])))

    name = str(data.get("name", Path(source).stem))
    logger.debug(f"Loaded scenario '{name}' from {source}: {graph.vertex_count} vertices")
    return Scenario(
        name=name,
        description=str(data.get("description", f"scenario file {source}")),
        build=build,
        weight=lambda graph: f,
        boundary_data=boundary_data,
        default_resolution=resolution,
        oracles=oracles,
        null_sets=lambda graph: parse_null_sets(null_items, graph),
        center=lambda graph: 0,
        notes=list(data.get("notes", [])),
        source=source,
    )


def load_scenario_file(path: Union[str, Path]) -> Scenario:
    """Load and validate a JSON scenario file.

    Raises:
        FileNotFoundError: If the file does not exist
        ParseError: With a field path (or line and column for malformed JSON)
    """
    path = Path(path)
    return scenario_from_dict(_read_json(path), str(path))
