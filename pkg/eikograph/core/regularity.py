import logging
import math
from dataclasses import asdict, dataclass
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import linregress

from eikograph.core.config import get_settings
from eikograph.core.graph.field import WeightField
from eikograph.core.graph.quadrature import QuadratureSettings
from eikograph.core.graph.types import MetricGraph
from eikograph.core.optical.solver import distance_matrix, edge_weights
from eikograph.core.utils import (
    DegenerateRadii, InsufficientPairs, MissingLinfTag, sample_vertices
)

logger = logging.getLogger(__name__)

MIN_PAIRS = 10
# Rounding allowance when an observed exponent meets its guarantee exactly
EXPONENT_SLACK = 1e-9


@dataclass
class HolderFit:
    """Least-squares fit L = constant * d ** exponent on a log-log scale"""
    exponent: float
    constant: float
    band: float
    stderr: float
    count: int
    window: Tuple[float, float]


@dataclass
class LipschitzReport:
    max_ratio: float
    bound: float
    passed: bool
    pairs_checked: int


@dataclass
class RegularityReport:
    """Observed regularity of a vertex function against the guarantee for its assumption"""
    Q_estimate: float
    Q_residual: float
    holder_exponent: float
    band: float
    predicted_exponent: float
    constant_estimate: float
    assumption_tag: str
    violation: bool

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def estimate_Q(graph: MetricGraph, radii: Sequence[float], centers: Optional[Sequence[int]] = None,
               sample: int = 32, seed: int = 0) -> Tuple[float, float]:
    """Homogeneous dimension from the growth of ball measure.

    mu(B_r) sums edge measure weights inside the d_G-ball, partially covered edges
    counted in proportion to their covered length. The slope of mean log mu(B_r)
    against log r is the estimate; the RMS of the fit residuals comes with it.

    Raises:
        DegenerateRadii: If the radii span less than one decade
    """
    radii = np.array(sorted(float(r) for r in radii))
    if radii.size < 2 or radii[0] <= 0 or radii[-1] / radii[0] < 10:
        raise DegenerateRadii(f"Radii {radii.tolist()} must be positive and span at least a decade")
    if centers is None:
        depth = graph.distance_to(sorted(graph.boundary_vertices))
        pool = np.flatnonzero(depth >= radii[-1]).tolist()
        if not pool:
            logger.warning(f"{graph.name}: no vertex lies {radii[-1]:g} away from the boundary; using all vertices")
            pool = range(graph.vertex_count)
        centers = sample_vertices(pool, sample, seed)

    ends = graph.endpoints
    lengths = graph.lengths
    measures = graph.measures
    logs = np.zeros((len(centers), radii.size))
    for i, row in enumerate(graph.graph_distances(list(centers), limit=radii[-1])):
        du, dv = row[ends[:, 0]], row[ends[:, 1]]
        for j, r in enumerate(radii):
            with np.errstate(invalid='ignore'):
                covered = np.maximum(0.0, r - du) + np.maximum(0.0, r - dv)
            covered = np.where(np.isfinite(covered), covered, 0.0)
            fraction = np.minimum(lengths, covered) / lengths
            logs[i, j] = math.log(max(float(np.sum(measures * fraction)), 1e-300))

    mean_log = logs.mean(axis=0)
    fit = linregress(np.log(radii), mean_log)
    residual = float(np.sqrt(np.mean((mean_log - (fit.intercept + fit.slope * np.log(radii))) ** 2)))
    logger.debug(f"{graph.name}: Q = {fit.slope:.4f} over {len(centers)} centres, residual {residual:.3g}")
    return float(fit.slope), residual


def holder_pairs(graph: MetricGraph, values: np.ndarray, center: int) -> np.ndarray:
    """(d_G(x, center), |values(x) - values(center)|) for every other vertex with finite data"""
    values = np.asarray(values, dtype=float)
    d = graph.graph_distances([center])[0]
    with np.errstate(invalid='ignore'):
        gap = np.abs(values - values[center])
    keep = np.isfinite(d) & np.isfinite(gap) & (d > 0)
    return np.column_stack([d[keep], gap[keep]])


def fit_holder(pairs: np.ndarray, window: Optional[Tuple[float, float]] = None) -> HolderFit:
    """Log-log regression of L against d inside the window (default: the smallest decade of d)

    Raises:
        InsufficientPairs: If fewer than ten usable pairs fall in the window
    """
    pairs = np.asarray(pairs, dtype=float).reshape(-1, 2)
    usable = pairs[(pairs[:, 0] > 0) & (pairs[:, 1] > 0) & np.isfinite(pairs).all(axis=1)]
    if usable.size == 0:
        raise InsufficientPairs("No pair has positive finite d and L")
    if window is None:
        low = float(usable[:, 0].min())
        window = (low, 10.0 * low)
    inside = usable[(usable[:, 0] >= window[0]) & (usable[:, 0] <= window[1] * (1 + 1e-12))]
    if len(inside) < MIN_PAIRS:
        raise InsufficientPairs(f"Only {len(inside)} pairs in window {window}, need {MIN_PAIRS}")
    fit = linregress(np.log(inside[:, 0]), np.log(inside[:, 1]))
    stderr = float(fit.stderr) if math.isfinite(fit.stderr) else 0.0
    return HolderFit(float(fit.slope), float(math.exp(fit.intercept)), 2.0 * stderr, stderr,
                     len(inside), (float(window[0]), float(window[1])))


def check_lipschitz_A2(graph: MetricGraph, f: WeightField, pairs: Optional[Sequence[Tuple[int, int]]] = None,
                       quad: Optional[QuadratureSettings] = None, sample: int = 64, seed: int = 0,
                       weights: Optional[np.ndarray] = None) -> LipschitzReport:
    """Check L_f(x, y) <= C * ||f||_inf * d_G(x, y) with C the graph's quasiconvexity constant.

    Without explicit pairs, every vertex is paired with a sample of sources.

    Raises:
        MissingLinfTag: If f is not declared bounded
    """
    if f.integrability != "Linf" or f.sup_bound is None:
        raise MissingLinfTag(f"{f.name} is tagged {f.tag}; the Lipschitz check needs an L-infinity bound")
    if weights is None:
        weights = edge_weights(graph, f, quad)
    bound = graph.quasiconvexity * f.sup_bound
    if pairs is None:
        sources = sample_vertices(range(graph.vertex_count), sample, seed)
        optical = distance_matrix(graph, weights, sources)
        metric = graph.graph_distances(sources)
    else:
        sources = sorted(set(x for x, _ in pairs))
        row = {x: i for i, x in enumerate(sources)}
        full_optical = distance_matrix(graph, weights, sources)
        full_metric = graph.graph_distances(sources)
        optical = np.array([full_optical[row[x], y] for x, y in pairs])
        metric = np.array([full_metric[row[x], y] for x, y in pairs])
    keep = metric > 0
    with np.errstate(invalid='ignore'):
        ratios = optical[keep] / metric[keep]
    max_ratio = float(np.max(ratios)) if ratios.size else 0.0
    passed = max_ratio <= bound * (1 + 1e-12)
    return LipschitzReport(max_ratio, bound, passed, int(ratios.size))


def lipschitz_ratio_profile(graph: MetricGraph, weights: np.ndarray, center: int) -> float:
    """max over x of L_f(x, center) / d_G(x, center); unbounded growth under refinement means no bi-Lipschitz bound"""
    optical = distance_matrix(graph, weights, [center])[0]
    metric = graph.graph_distances([center])[0]
    keep = (metric > 0) & np.isfinite(optical)
    return float(np.max(optical[keep] / metric[keep])) if keep.any() else 0.0


def regularity_report(graph: MetricGraph, f: WeightField, values: np.ndarray, center: int,
                      q_radii: Sequence[float], window: Optional[Tuple[float, float]] = None,
                      centers: Optional[Sequence[int]] = None) -> RegularityReport:
    """Fit Q and the Hoelder exponent of ``values`` at ``center`` and compare with the declared assumption.

    Under A1(p) the guaranteed exponent is 1 - Q/p, under A2 it is 1. A violation is
    an observed exponent below the guarantee by more than the fit band; exceeding it
    is expected and not flagged.
    """
    q, residual = estimate_Q(graph, q_radii, centers, seed=get_settings().seed)
    fit = fit_holder(holder_pairs(graph, values, center), window)
    if f.integrability == "Linf":
        tag, predicted = "A2", 1.0
    elif f.integrability == "Lp" and f.p is not None:
        tag = f"A1({f.p:g})"
        predicted = 1.0 - q / f.p if f.p > q else math.nan
    else:
        tag, predicted = "none", math.nan
    violation = math.isfinite(predicted) and fit.exponent + fit.band < predicted - EXPONENT_SLACK
    if violation:
        logger.warning(f"{graph.name}: observed exponent {fit.exponent:.3f} is below the {tag} guarantee {predicted:.3f}")
    return RegularityReport(q, residual, fit.exponent, fit.band, predicted, fit.constant, tag, violation)
