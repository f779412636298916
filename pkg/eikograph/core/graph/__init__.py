from .types import Edge, MetricGraph, Path, PathSegment, Vertex
from .field import WeightField
from .quadrature import QuadratureSettings, curve_integral, integrate_edges, integrate_segments
from .builder import build_graph, check_connected, overlay_segment, refine, to_networkx, with_boundary
from .grid import grid_domain, stencil_quasiconvexity

__all__ = [
    'Edge',
    'MetricGraph',
    'Path',
    'PathSegment',
    'Vertex',
    'WeightField',
    'QuadratureSettings',
    'curve_integral',
    'integrate_edges',
    'integrate_segments',
    'build_graph',
    'check_connected',
    'overlay_segment',
    'refine',
    'to_networkx',
    'with_boundary',
    'grid_domain',
    'stencil_quasiconvexity',
]
