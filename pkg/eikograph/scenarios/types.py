from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from eikograph.core.dirichlet import DirichletProblem, Solution
from eikograph.core.graph.field import WeightField
from eikograph.core.graph.quadrature import QuadratureSettings
from eikograph.core.graph.types import MetricGraph
from eikograph.core.optical.solver import label_setting
from eikograph.core.transversal import NullSetMarking

PROVENANCES = ("PUBLISHED", "TRIVIAL", "DERIVED")


@dataclass
class ScenarioRun:
    """Everything a scenario's oracles can look at after the solve"""
    scenario: "Scenario"
    resolution: float
    graph: MetricGraph
    f: WeightField
    problem: DirichletProblem
    quad: QuadratureSettings
    weights: np.ndarray
    solution: Solution
    family: List[NullSetMarking] = field(default_factory=list)
    transversal: Optional[Solution] = None
    seed: int = 0
    workers: int = 1
    tol: Optional[float] = None
    radii: Optional[List[float]] = None
    pairs: Optional[np.ndarray] = None
    extras: Dict[str, Any] = field(default_factory=dict)
    _distances: Dict[int, np.ndarray] = field(default_factory=dict, repr=False)

    @property
    def u(self) -> np.ndarray:
        return self.solution.u

    def from_vertex(self, vertex: int) -> np.ndarray:
        """L_f(vertex, .) for every vertex, cached"""
        vertex = int(vertex)
        if vertex not in self._distances:
            self._distances[vertex] = label_setting(self.graph, self.weights, [vertex])[0]
        return self._distances[vertex]

    def vertex_at(self, point: Sequence[float]) -> int:
        return self.graph.nearest_vertex(point)


# check(run, tolerance) -> (observed value, passed)
Check = Callable[[ScenarioRun, float], Tuple[Any, bool]]


@dataclass
class Oracle:
    """A named quantity with its closed-form expectation and where that value comes from.

    Report-only oracles record a value without judging it.
    """
    quantity: str
    provenance: str
    expected: str
    tolerance: float
    check: Check
    report_only: bool = False

    def __post_init__(self):
        if self.provenance not in PROVENANCES:
            raise ValueError(f"Oracle '{self.quantity}' has unknown provenance '{self.provenance}'")


@dataclass
class QuantityResult:
    quantity: str
    provenance: str
    expected: str
    observed: Any
    tolerance: float
    passed: bool
    report_only: bool = False
    detail: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return {
            'quantity': self.quantity,
            'provenance': self.provenance,
            'expected': self.expected,
            'observed': self.observed,
            'tolerance': self.tolerance,
            'passed': self.passed,
            'report_only': self.report_only,
            'detail': self.detail,
        }


@dataclass
class Scenario:
    """A worked example: how to build it, what to solve and which oracles to check.

    ``build`` takes the resolution (grid spacing or largest edge length). ``exact``
    returns closed-form vertex values and ``error_mask`` the vertices they are
    compared on; together they drive the sup-error and convergence checks.
    """
    name: str
    description: str
    build: Callable[[float], MetricGraph]
    weight: Callable[[MetricGraph], WeightField]
    boundary_data: Callable[[MetricGraph], Dict[int, float]]
    default_resolution: float
    oracles: List[Oracle] = field(default_factory=list)
    null_sets: Callable[[MetricGraph], List[NullSetMarking]] = lambda graph: []
    exact: Optional[Callable[[MetricGraph], np.ndarray]] = None
    error_mask: Optional[Callable[[MetricGraph], np.ndarray]] = None
    center: Callable[[MetricGraph], int] = lambda graph: 0
    quad: Optional[QuadratureSettings] = None
    notes: List[str] = field(default_factory=list)
    source: str = "builtin"


@dataclass
class ScenarioReport:
    """Outcome of one scenario run"""
    name: str
    resolution: float
    vertices: int
    edges: int
    results: List[QuantityResult]
    diagnostics: Dict[str, Any] = field(default_factory=dict)
    notes: List[str] = field(default_factory=list)
    artifacts: Dict[str, str] = field(default_factory=dict)
    runtime: float = 0.0

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def failures(self) -> List[QuantityResult]:
        return [r for r in self.results if not r.passed]

    def result(self, quantity: str) -> Optional[QuantityResult]:
        return next((r for r in self.results if r.quantity == quantity), None)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'name': self.name,
            'resolution': self.resolution,
            'vertices': self.vertices,
            'edges': self.edges,
            'passed': self.passed,
            'results': [r.to_dict() for r in self.results],
            'diagnostics': self.diagnostics,
            'notes': self.notes,
        }
