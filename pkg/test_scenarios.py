import json
from pathlib import Path

import numpy as np
import pytest

import eikograph.scenarios
from eikograph.core.graph import grid_domain
from eikograph.core.optical import edge_weights
from eikograph.core.utils import ParseError, UnknownScenario
from eikograph.scenarios import tolerances as tol
from eikograph.scenarios import (
    convergence, get_scenario, list_scenarios, load_scenario_file, run_scenario, scenario_from_dict
)

PACKAGE_DIR = Path(eikograph.scenarios.__file__).parent
BUILTINS = ["blocked_square", "circle", "comb", "interval_loss", "interval_noncurve", "interval_sqrt",
            "punctured_disk"]
SLOW = {"circle", "comb", "punctured_disk"}


def test_builtin_names():
    assert list_scenarios() == BUILTINS


def test_unknown_scenario_suggests_a_name():
    with pytest.raises(UnknownScenario) as e:
        get_scenario("interval_los")
    assert "interval_loss" in str(e.value)


@pytest.mark.parametrize("name", [
    pytest.param(name, marks=pytest.mark.slow) if name in SLOW else name for name in BUILTINS
])
def test_builtin_scenario_passes(name, tmp_path):
    report = run_scenario(name, out_dir=tmp_path)
    failed = [(r.quantity, r.observed, r.detail) for r in report.failures]
    assert report.passed, failed
    assert (tmp_path / f"{name}_report.json").exists()
    assert (tmp_path / f"{name}_solution.csv").exists()


def test_reports_are_reproducible(tmp_path):
    first = run_scenario("interval_loss", out_dir=tmp_path / "a")
    second = run_scenario("interval_loss", out_dir=tmp_path / "b")
    a = (tmp_path / "a" / "interval_loss_report.json").read_bytes()
    b = (tmp_path / "b" / "interval_loss_report.json").read_bytes()
    assert a == b
    assert first.to_dict() == second.to_dict()


def test_report_lists_every_oracle(tmp_path):
    report = run_scenario("interval_loss", out_dir=tmp_path)
    data = json.loads((tmp_path / "interval_loss_report.json").read_text())
    assert [r['quantity'] for r in data['results']] == [r.quantity for r in report.results]
    assert data['diagnostics']['sigma_g'] == [0]
    assert report.result("compatibility").passed


def test_run_without_artifacts(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    report = run_scenario("interval_loss", write=False)
    assert report.artifacts == {}
    assert not (tmp_path / "out").exists()


def test_convergence_error_shrinks():
    table = convergence("interval_sqrt", [0.02, 0.01, 0.005])
    assert table['h'].tolist() == [0.02, 0.01, 0.005]
    errors = table['sup_error'].tolist()
    assert errors[-1] < errors[0]
    assert table['rtol'].iloc[-1] < table['rtol'].iloc[0]


@pytest.mark.slow
def test_convergence_over_three_decades():
    errors = convergence("interval_sqrt", [1e-1, 1e-2, 1e-3])['sup_error'].tolist()
    assert errors[0] > errors[1] > errors[2]
    assert errors[2] <= tol.INTERVAL_SUP_ERROR


def test_convergence_needs_a_closed_form():
    with pytest.raises(ValueError):
        convergence("punctured_disk", [0.1, 0.05])


def test_library_file_passes(tmp_path):
    scenario = load_scenario_file(PACKAGE_DIR / "library" / "interval_loss.json")
    assert scenario.name == "interval_loss_file"
    report = run_scenario(scenario, out_dir=tmp_path)
    assert report.passed, [(r.quantity, r.observed) for r in report.failures]


def test_template_file_passes(tmp_path):
    scenario = load_scenario_file(PACKAGE_DIR / "templates" / "scenario.json")
    graph = scenario.build(scenario.default_resolution)
    assert graph.metadata["refined"] == 20
    family = scenario.null_sets(graph)
    assert [m.name for m in family] == ["diagonal"]
    assert len(family[0].blocked_edges) == 20
    report = run_scenario(scenario, out_dir=tmp_path)
    assert report.passed, [(r.quantity, r.observed) for r in report.failures]
    assert report.result("transversal_gap").report_only


def _minimal(**changes):
    data = {
        "name": "tiny",
        "graph": {
            "vertices": [{"id": "a", "xy": [0, 0], "boundary": True}, {"id": "b", "xy": [1, 0]}],
            "edges": [{"u": "a", "v": "b"}],
        },
        "f": {"kind": "builtin", "name": "constant", "value": 1.0},
        "g": [{"vertex": "a", "value": 0.0}],
    }
    data.update(changes)
    return data


def test_minimal_description_loads():
    scenario = scenario_from_dict(_minimal())
    graph = scenario.build(scenario.default_resolution)
    assert scenario.boundary_data(graph) == {0: 0.0}


@pytest.mark.parametrize("name, registered", [("inverse_sqrt", "interval_sqrt"), ("inverse_distance", "interval_noncurve")])
def test_file_builtin_fields_match_the_registered_scenarios(name, registered, quad):
    scenario = scenario_from_dict(_minimal(f={"kind": "builtin", "name": name}))
    reference = get_scenario(registered)
    graph = grid_domain({"kind": "interval", "bounds": [0.1, 1.0]}, 0.1)
    f, expected = scenario.weight(graph), reference.weight(graph)
    assert (f.name, f.tag) == (expected.name, expected.tag)
    np.testing.assert_allclose(edge_weights(graph, f, quad), edge_weights(graph, expected, quad))


@pytest.mark.parametrize("changes, location", [
    ({"g": [{"vertex": "zz", "value": 0.0}]}, "g[0].vertex"),
    ({"g": [{"vertex": "a", "value": "low"}]}, "g[0].value"),
    ({"f": {"kind": "builtin", "name": "gaussian"}}, "f.name"),
    ({"f": {"kind": "expression"}}, "f"),
    ({"f": {"kind": "spline"}}, "f.kind"),
    ({"null_sets": [{"blocked_edges": ["x"]}]}, "null_sets[0].blocked_edges[0]"),
    ({"refine": "many"}, "refine"),
])
def test_parse_errors_name_the_field(changes, location):
    with pytest.raises(ParseError) as e:
        scenario_from_dict(_minimal(**changes))
    assert e.value.location == location


def test_missing_field():
    data = _minimal()
    del data["f"]
    with pytest.raises(ParseError) as e:
        scenario_from_dict(data)
    assert "'f'" in str(e.value)


def test_invalid_json_reports_the_line(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{\n  "name": "broken",\n  "f": }\n')
    with pytest.raises(ParseError) as e:
        load_scenario_file(path)
    assert e.value.location.startswith("line 3")


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_scenario_file(tmp_path / "absent.json")
