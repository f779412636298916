import logging
import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from eikograph.core.config import Settings, get_settings
from eikograph.core.graph.field import WeightField
from eikograph.core.graph.types import MetricGraph, Path

logger = logging.getLogger(__name__)

# Cells whose error estimate reaches this share of their segment's worst cell are trisected
REFINE_SHARE = 0.25


@dataclass(frozen=True)
class QuadratureSettings:
    """Composite open midpoint rule, optionally refined adaptively"""
    points_per_unit: float = 64.0
    rtol: float = 1e-6
    atol: float = 1e-12
    max_rounds: int = 60
    adaptive: bool = True

    @classmethod
    def from_settings(cls, settings: Optional[Settings] = None) -> "QuadratureSettings":
        settings = settings or get_settings()
        return cls(
            points_per_unit=settings.quad_points_per_unit,
            rtol=settings.quad_rtol,
            atol=settings.quad_atol,
            max_rounds=settings.quad_max_rounds,
        )

    def with_rtol(self, rtol: float) -> "QuadratureSettings":
        return replace(self, rtol=rtol)

    def describe(self) -> str:
        mode = f"adaptive rtol={self.rtol:g}" if self.adaptive else "plain"
        return f"midpoint {self.points_per_unit:g}/unit, {mode}"


def integrate_segments(graph: MetricGraph, f: WeightField, edge_ids: np.ndarray,
                       s0: np.ndarray, s1: np.ndarray,
                       quad: Optional[QuadratureSettings] = None) -> np.ndarray:
    """Integrate f over [s0, s1] on each listed edge.

    Every segment starts with n = max(1, ceil(points_per_unit * length)) equal cells.
    A cell's one-node and three-node midpoint sums give an error estimate; in adaptive
    mode the worst cells are trisected (children reuse the parent's nodes) until the
    segment's summed estimate is within max(atol, rtol * |integral|). Segment endpoints
    are never sampled. A segment with an infinite sample, or one that has not settled
    after ``max_rounds`` rounds, integrates to +inf.
    """
    quad = quad or QuadratureSettings.from_settings()
    edge_ids = np.asarray(edge_ids, dtype=np.int64)
    s0 = np.asarray(s0, dtype=float)
    s1 = np.asarray(s1, dtype=float)
    count = len(edge_ids)
    result = np.zeros(count, dtype=float)
    if count == 0:
        return result

    spans = s1 - s0
    if f.piecewise_constant:
        values = f.evaluate(graph, edge_ids, 0.5 * (s0 + s1))
        with np.errstate(invalid='ignore'):
            result = values * spans
        result[spans <= 0] = 0.0
        return result

    nodes = np.maximum(1, np.ceil(quad.points_per_unit * spans - 1e-9)).astype(np.int64)
    nodes[spans <= 0] = 0
    cell_seg = np.repeat(np.arange(count), nodes)
    first = np.repeat(np.cumsum(nodes) - nodes, nodes)
    index = np.arange(len(cell_seg)) - first
    width = np.repeat(spans / np.maximum(nodes, 1), nodes)
    left = s0[cell_seg] + index * width

    def sample(seg: np.ndarray, at: np.ndarray) -> np.ndarray:
        return f.evaluate(graph, edge_ids[seg], at)

    f_mid = sample(cell_seg, left + 0.5 * width)
    if not quad.adaptive:
        infinite = ~np.isfinite(f_mid)
        result = np.bincount(cell_seg, weights=np.where(infinite, 0.0, width * f_mid), minlength=count)
        result[np.bincount(cell_seg, weights=infinite.astype(float), minlength=count) > 0] = np.inf
        return result

    f_left = sample(cell_seg, left + width / 6.0)
    f_right = sample(cell_seg, left + 5.0 * width / 6.0)

    active = np.ones(count, dtype=bool)
    active[nodes == 0] = False
    unsettled = np.zeros(count, dtype=bool)
    for round_number in range(quad.max_rounds + 1):
        with np.errstate(invalid='ignore', over='ignore'):
            coarse = width * f_mid
            fine = width / 3.0 * (f_left + f_mid + f_right)
            estimate = np.abs(fine - coarse)
        infinite = ~(np.isfinite(f_left) & np.isfinite(f_mid) & np.isfinite(f_right))
        seg_infinite = np.bincount(cell_seg, weights=infinite.astype(float), minlength=count) > 0
        fine[infinite] = 0.0
        estimate[infinite] = 0.0
        total = np.bincount(cell_seg, weights=fine, minlength=count)
        error = np.bincount(cell_seg, weights=estimate, minlength=count)
        settled = seg_infinite | (error <= np.maximum(quad.atol, quad.rtol * np.abs(total)))
        done = active & settled
        result[done] = np.where(seg_infinite[done], np.inf, total[done])
        active &= ~settled
        if not active.any():
            break
        if round_number == quad.max_rounds:
            unsettled = active.copy()
            break

        keep = active[cell_seg]
        cell_seg, left, width = cell_seg[keep], left[keep], width[keep]
        f_left, f_mid, f_right, estimate = f_left[keep], f_mid[keep], f_right[keep], estimate[keep]

        worst = np.zeros(count, dtype=float)
        np.maximum.at(worst, cell_seg, estimate)
        split = (estimate >= REFINE_SHARE * worst[cell_seg]) & (estimate > 0)
        stay = ~split

        parent_seg = cell_seg[split]
        parent_left = left[split]
        child_width = width[split] / 3.0
        child_seg = np.tile(parent_seg, 3)
        child_left = np.concatenate([parent_left, parent_left + child_width, parent_left + 2.0 * child_width])
        child_w = np.tile(child_width, 3)
        child_mid = np.concatenate([f_left[split], f_mid[split], f_right[split]])
        child_fl = sample(child_seg, child_left + child_w / 6.0)
        child_fr = sample(child_seg, child_left + 5.0 * child_w / 6.0)

        cell_seg = np.concatenate([cell_seg[stay], child_seg])
        left = np.concatenate([left[stay], child_left])
        width = np.concatenate([width[stay], child_w])
        f_mid = np.concatenate([f_mid[stay], child_mid])
        f_left = np.concatenate([f_left[stay], child_fl])
        f_right = np.concatenate([f_right[stay], child_fr])

    if unsettled.any():
        bad = edge_ids[unsettled]
        logger.warning(f"{f.name}: {len(bad)} segment(s) did not settle after {quad.max_rounds} "
                       f"refinement rounds, treated as non-integrable (edges {bad[:5].tolist()})")
        result[unsettled] = np.inf
    return result


def integrate_edges(graph: MetricGraph, f: WeightField,
                    quad: Optional[QuadratureSettings] = None) -> np.ndarray:
    """Integral of f over every whole edge"""
    ids = np.arange(graph.edge_count)
    return integrate_segments(graph, f, ids, np.zeros(graph.edge_count), graph.lengths, quad)


def curve_integral(graph: MetricGraph, f: WeightField, path: Path,
                   quad: Optional[QuadratureSettings] = None) -> float:
    """I_f(path) = sum of the integrals of f over the path's segments"""
    graph.validate_path(path)
    if path.is_empty:
        return 0.0
    ids = np.array([segment.edge for segment in path.segments], dtype=np.int64)
    s0 = np.array([segment.s0 for segment in path.segments], dtype=float)
    s1 = np.array([segment.s1 for segment in path.segments], dtype=float)
    parts = integrate_segments(graph, f, ids, s0, s1, quad)
    if np.isinf(parts).any():
        return math.inf
    return math.fsum(parts.tolist())
