import math
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np


class EikographError(Exception):
    """Base exception for eikograph errors."""
    pass


class DisconnectedGraph(EikographError):
    """The graph has more than one connected component."""
    pass


class NonpositiveEdgeLength(EikographError):
    """An edge has zero, negative or non-finite length."""
    pass


class EmptyDomain(EikographError):
    """A grid domain contains no interior grid point."""
    pass


class InvalidPath(EikographError):
    """A path does not describe a walk in the graph."""
    pass


class EmptyBoundary(EikographError):
    """A Dirichlet problem was attached to an empty boundary."""
    pass


class InvalidBoundary(EikographError):
    """Boundary vertices are not flagged or carry non-finite data."""
    pass


class EmptySourceSet(EikographError):
    """A shortest-path search was started without sources."""
    pass


class BudgetExceeded(EikographError):
    """An all-pairs scan would exceed the configured budget."""
    pass


class EmptyEffectiveBoundary(EikographError):
    """No boundary vertex attains its data."""
    pass


class EmptyNeighborhood(EikographError):
    """No admissible neighbour lies within the requested radius."""

    def __init__(self, radius: float, vertex: Optional[int] = None):
        self.radius = radius
        self.vertex = vertex
        where = f" around vertex {vertex}" if vertex is not None else ""
        super().__init__(f"No admissible neighbour within radius {radius:g}{where}")


class DegenerateRadii(EikographError):
    """Ball radii do not span enough scales for a regression."""
    pass


class InsufficientPairs(EikographError):
    """Too few (d, L) pairs fall inside the fit window."""
    pass


class MissingLinfTag(EikographError):
    """A weight field lacks the L-infinity declaration an operation needs."""
    pass


class InvalidMarking(EikographError):
    """A null-set marking references edges or vertices outside the graph."""
    pass


class UnknownScenario(EikographError):
    """No scenario is registered under the requested name."""
    pass


class ParseError(EikographError):
    """A scenario description is malformed.

    Args:
        message: What is wrong
        location: Dotted path to the offending field, e.g. ``graph.edges[3].u``
    """

    def __init__(self, message: str, location: str = ""):
        self.location = location
        text = f"{location}: {message}" if location else message
        super().__init__(text)


def geometric_radii(r0: float, count: int = 7) -> List[float]:
    """Strictly decreasing schedule r0 * 2**-k, k = 0..count-1"""
    return [r0 * 2.0 ** (-k) for k in range(count)]


def sample_vertices(candidates: Iterable[int], count: Optional[int], seed: int = 0) -> List[int]:
    """Deterministic uniform sample without replacement, returned sorted"""
    pool = sorted(set(candidates))
    if count is None or count >= len(pool):
        return pool
    rng = np.random.default_rng(seed)
    picked = rng.choice(len(pool), size=count, replace=False)
    return sorted(pool[i] for i in picked)


def parse_float_list(text: str) -> List[float]:
    """Parse '1e-1,1e-2' into [0.1, 0.01]"""
    return [float(part) for part in text.split(',') if part.strip()]


def to_jsonable(value: Any) -> Any:
    """Convert numpy scalars, sets and non-finite floats into JSON-safe values"""
    if isinstance(value, dict):
        return {str(key): to_jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple, set, frozenset)):
        items = sorted(value) if isinstance(value, (set, frozenset)) else value
        return [to_jsonable(item) for item in items]
    if isinstance(value, np.ndarray):
        return [to_jsonable(item) for item in value.tolist()]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        if math.isnan(value):
            return None
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    return value


def sup_abs_difference(a: Sequence[float], b: Sequence[float]) -> float:
    """Sup-norm of a - b over entries where both are finite"""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    mask = np.isfinite(a) & np.isfinite(b)
    if not mask.any():
        return 0.0
    return float(np.max(np.abs(a[mask] - b[mask])))


def vanishes(values: Dict[float, float]) -> bool:
    """Judge a modulus curve as vanishing: finite at the smallest radius and at most half its value at the largest"""
    small, large = values[min(values)], values[max(values)]
    if not math.isfinite(small):
        return False
    return small <= 0.5 * large if large > 0 else True
