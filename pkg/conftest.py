import numpy as np
import pytest

from eikograph.core.dirichlet import DirichletProblem
from eikograph.core.graph import QuadratureSettings, WeightField, build_graph, grid_domain, with_boundary


@pytest.fixture(autouse=True)
def clean_environment(monkeypatch):
    """Tests run against the built-in defaults, not a developer's .env"""
    for key in [
        'EIKOGRAPH_QUAD_DENSITY', 'EIKOGRAPH_QUAD_RTOL', 'EIKOGRAPH_QUAD_ATOL', 'EIKOGRAPH_QUAD_MAX_ROUNDS',
        'EIKOGRAPH_RADII_COUNT', 'EIKOGRAPH_RADIUS_FRACTION', 'EIKOGRAPH_MONGE_TOL', 'EIKOGRAPH_EXACT_TOL',
        'EIKOGRAPH_ALL_PAIRS_LIMIT', 'EIKOGRAPH_PAIR_BUDGET', 'EIKOGRAPH_WORKERS', 'EIKOGRAPH_SEED',
        'EIKOGRAPH_OUTPUT_DIR', 'EIKOGRAPH_LOG_LEVEL',
    ]:
        monkeypatch.delenv(key, raising=False)


@pytest.fixture
def quad():
    return QuadratureSettings()


@pytest.fixture
def path_graph():
    """a - b - c - d on the x axis at 0, 1, 3 and 3.5; a and d are boundary vertices"""
    return build_graph({
        "name": "path",
        "graph": {
            "vertices": [
                {"id": "a", "xy": [0.0, 0.0], "boundary": True},
                {"id": "b", "xy": [1.0, 0.0]},
                {"id": "c", "xy": [3.0, 0.0]},
                {"id": "d", "xy": [3.5, 0.0], "boundary": True},
            ],
            "edges": [{"u": "a", "v": "b"}, {"u": "b", "v": "c"}, {"u": "c", "v": "d"}],
        },
    })


@pytest.fixture
def unit_interval():
    """[0, 1] sampled at h = 0.01; vertex i sits at x = i / 100"""
    return grid_domain({"kind": "interval", "bounds": [0.0, 1.0]}, 0.01)


@pytest.fixture
def loss_problem(unit_interval):
    """f = 1 with g(0) = 0 and g(1) = 2, so the data at x = 1 cannot be attained"""
    return DirichletProblem(unit_interval, WeightField.constant(1.0), {0: 0.0, 100: 2.0})


@pytest.fixture
def sqrt_interval():
    """[-1, 1] at h = 0.01 with f = 1/sqrt|x|; vertex 100 is the origin"""
    graph = grid_domain({"kind": "interval", "bounds": [-1.0, 1.0]}, 0.01)
    f = WeightField.from_points(lambda p: 1.0 / np.sqrt(np.abs(p[:, 0])), alpha=1.0,
                                integrability="Lp", p=1.9, name="1/sqrt|x|")
    return graph, f


@pytest.fixture
def unit_square():
    """Unit square at h = 0.1 with the 8-neighbour stencil, boundary on the left edge"""
    graph = grid_domain({"kind": "rectangle", "bounds": [[0.0, 1.0], [0.0, 1.0]]}, 0.1, stencil=8)
    left = np.flatnonzero(np.abs(graph.coords[:, 0]) < 1e-12)
    return with_boundary(graph, left.tolist())
