import logging
import math
from dataclasses import dataclass, replace
from typing import Callable, Dict, Mapping, Optional

import numpy as np

from eikograph.core.graph.types import MetricGraph

logger = logging.getLogger(__name__)

# evaluator(graph, edge_ids, s) -> f values, vectorised over aligned arrays
Evaluator = Callable[[MetricGraph, np.ndarray, np.ndarray], np.ndarray]
PointFunction = Callable[[np.ndarray], np.ndarray]

INTEGRABILITY_TAGS = ("Lp", "Linf", "none")

_EXPRESSION_NAMES = {
    'sqrt': np.sqrt, 'abs': np.abs, 'exp': np.exp, 'log': np.log,
    'sin': np.sin, 'cos': np.cos, 'tan': np.tan, 'arctan2': np.arctan2,
    'minimum': np.minimum, 'maximum': np.maximum, 'where': np.where,
    'pi': math.pi, 'inf': math.inf,
}


@dataclass(frozen=True)
class WeightField:
    """The running cost f on a metric graph.

    Values lie in (0, +inf]; ``alpha`` is the declared positive lower bound.
    ``integrability`` is one of ``Lp`` (with ``p``), ``Linf`` (with ``sup_bound``)
    or ``none``.
    """
    evaluator: Evaluator
    alpha: float
    integrability: str = "none"
    p: Optional[float] = None
    sup_bound: Optional[float] = None
    piecewise_constant: bool = False
    name: str = "f"

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"Weight field lower bound must be positive, got {self.alpha}")
        if self.integrability not in INTEGRABILITY_TAGS:
            raise ValueError(f"Unknown integrability tag '{self.integrability}'")

    @property
    def tag(self) -> str:
        if self.integrability == "Lp":
            return f"Lp({self.p:g})" if self.p is not None else "Lp"
        return self.integrability

    def evaluate(self, graph: MetricGraph, edge_ids: np.ndarray, s: np.ndarray) -> np.ndarray:
        edge_ids = np.asarray(edge_ids, dtype=np.int64)
        s = np.asarray(s, dtype=float)
        with np.errstate(divide='ignore', invalid='ignore', over='ignore'):
            values = np.asarray(self.evaluator(graph, edge_ids, s), dtype=float)
        values = np.broadcast_to(values, s.shape).astype(float, copy=True)
        values[np.isnan(values)] = np.inf
        return values

    def at(self, graph: MetricGraph, edge_id: int, s: float) -> float:
        """f(e, s) for a single edge position"""
        return float(self.evaluate(graph, np.array([edge_id]), np.array([s]))[0])

    def scaled(self, c: float) -> "WeightField":
        if not c > 0:
            raise ValueError(f"Scale factor must be positive, got {c}")
        inner = self.evaluator
        return replace(
            self,
            evaluator=lambda graph, ids, s: c * inner(graph, ids, s),
            alpha=c * self.alpha,
            sup_bound=None if self.sup_bound is None else c * self.sup_bound,
            name=f"{c:g}*{self.name}",
        )

    def truncated(self, M: float) -> "WeightField":
        """f_M = min(f, M); M = inf returns the field unchanged"""
        if math.isinf(M):
            return self
        if not M > self.alpha:
            raise ValueError(f"Truncation level {M} must exceed alpha={self.alpha}")
        inner = self.evaluator
        return replace(
            self,
            evaluator=lambda graph, ids, s: np.minimum(inner(graph, ids, s), M),
            integrability="Linf",
            sup_bound=M if self.sup_bound is None else min(M, self.sup_bound),
            name=f"min({self.name},{M:g})",
        )

    def check_lower_bound(self, graph: MetricGraph, samples_per_edge: int = 3) -> int:
        """Count interior samples with f < alpha"""
        if graph.edge_count == 0:
            return 0
        fractions = (np.arange(samples_per_edge) + 0.5) / samples_per_edge
        ids = np.repeat(np.arange(graph.edge_count), samples_per_edge)
        s = np.tile(fractions, graph.edge_count) * graph.lengths[ids]
        values = self.evaluate(graph, ids, s)
        violations = int(np.sum(values < self.alpha))
        if violations:
            logger.warning(f"{self.name}: {violations} samples fall below alpha={self.alpha}")
        return violations

    @classmethod
    def constant(cls, c: float, name: Optional[str] = None) -> "WeightField":
        return cls(
            evaluator=lambda graph, ids, s: np.full(s.shape, float(c)),
            alpha=float(c),
            integrability="Linf",
            sup_bound=float(c),
            piecewise_constant=True,
            name=name or f"const({c:g})",
        )

    @classmethod
    def from_points(cls, fn: PointFunction, alpha: float,
                    tagged: Optional[Mapping[str, PointFunction]] = None, **kwargs) -> "WeightField":
        """Field given by a vectorised function of ambient coordinates (m x dim array).

        Edges whose tag appears in ``tagged`` use that function instead.
        """
        tagged = dict(tagged or {})

        def evaluator(graph: MetricGraph, ids: np.ndarray, s: np.ndarray) -> np.ndarray:
            points = graph.edge_points(ids, s)
            values = np.empty(s.shape, dtype=float)
            remaining = np.ones(s.shape, dtype=bool)
            for tag, tag_fn in tagged.items():
                mask = graph.tag_mask(tag)[ids]
                if mask.any():
                    values[mask] = tag_fn(points[mask])
                    remaining &= ~mask
            if remaining.any():
                values[remaining] = fn(points[remaining])
            return values

        return cls(evaluator=evaluator, alpha=alpha, **kwargs)

    @classmethod
    def along_curve(cls, fn: Callable[[np.ndarray], np.ndarray], alpha: float, **kwargs) -> "WeightField":
        """Field given as a function of the curve parameter offset + s"""
        def evaluator(graph: MetricGraph, ids: np.ndarray, s: np.ndarray) -> np.ndarray:
            return fn(graph.offsets[ids] + s)

        return cls(evaluator=evaluator, alpha=alpha, **kwargs)

    @classmethod
    def per_edge(cls, values: Mapping[int, float], **kwargs) -> "WeightField":
        """Piecewise-constant field keyed by unrefined edge id"""
        table = np.array([values[k] for k in sorted(values)], dtype=float)
        keys = np.array(sorted(values), dtype=np.int64)
        if not np.array_equal(keys, np.arange(len(keys))):
            raise ValueError("per_edge values must cover edge ids 0..n-1")
        kwargs.setdefault("alpha", float(table.min()))
        kwargs.setdefault("integrability", "Linf")
        kwargs.setdefault("sup_bound", float(table.max()))
        kwargs.setdefault("name", "per_edge")

        def evaluator(graph: MetricGraph, ids: np.ndarray, s: np.ndarray) -> np.ndarray:
            return table[graph.origins[ids]]

        return cls(evaluator=evaluator, piecewise_constant=True, **kwargs)

    @classmethod
    def from_expression(cls, expression: str, alpha: float, **kwargs) -> "WeightField":
        """Field from a numpy expression in x, y, r (distance to the origin) and t (curve parameter)"""
        code = compile(expression, "<weight field>", "eval")
        allowed = set(_EXPRESSION_NAMES) | {'x', 'y', 'r', 't'}
        unknown = set(code.co_names) - allowed
        if unknown:
            raise ValueError(f"Unknown names in expression '{expression}': {', '.join(sorted(unknown))}")

        def evaluator(graph: MetricGraph, ids: np.ndarray, s: np.ndarray) -> np.ndarray:
            points = graph.edge_points(ids, s)
            zeros = np.zeros(s.shape)
            namespace: Dict[str, object] = dict(_EXPRESSION_NAMES)
            namespace['x'] = points[:, 0] if points.shape[1] > 0 else zeros
            namespace['y'] = points[:, 1] if points.shape[1] > 1 else zeros
            namespace['r'] = np.linalg.norm(points, axis=1) if points.shape[1] else zeros
            namespace['t'] = graph.offsets[ids] + s
            return eval(code, {'__builtins__': {}}, namespace)

        kwargs.setdefault("name", expression)
        return cls(evaluator=evaluator, alpha=alpha, **kwargs)
