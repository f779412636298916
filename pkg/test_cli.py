import json

import numpy as np
import pandas as pd
import pytest

from eikograph.core.cli import EXIT_FAILED, EXIT_OK, EXIT_USAGE, EikographCLI, main
from eikograph.scenarios import runner
from eikograph.scenarios.builtins import midline_marking
from eikograph.scenarios.runner import prepare_run


def test_unknown_command_is_a_usage_error():
    assert main(["frobnicate"]) == EXIT_USAGE


def test_help_exits_cleanly():
    assert main(["--help"]) == EXIT_OK


def test_list():
    assert main(["list"]) == EXIT_OK


def test_unknown_scenario(tmp_path):
    assert main(["solve", "--scenario", "nowhere", "--out", str(tmp_path)]) == EXIT_USAGE


def test_missing_source(tmp_path):
    assert main(["solve", "--out", str(tmp_path)]) == EXIT_USAGE


def test_missing_file(tmp_path):
    assert main(["solve", "--file", str(tmp_path / "absent.json"), "--out", str(tmp_path)]) == EXIT_USAGE


def test_scenario_writes_artifacts(tmp_path):
    assert main(["scenario", "--scenario", "interval_loss", "--out", str(tmp_path)]) == EXIT_OK
    report = json.loads((tmp_path / "interval_loss_report.json").read_text())
    assert report['passed']
    assert (tmp_path / "interval_loss_solution.csv").exists()


def test_solve(tmp_path):
    assert main(["solve", "--scenario", "interval_loss", "--h", "0.05", "--out", str(tmp_path)]) == EXIT_OK
    frame = pd.read_csv(tmp_path / "interval_loss_solution.csv")
    assert len(frame) == 21
    assert frame['u'].iloc[-1] == pytest.approx(1.0)
    summary = json.loads((tmp_path / "interval_loss_solve.json").read_text())
    assert summary['sigma_g'] == [0]


def test_solve_rejects_several_spacings(tmp_path):
    assert main(["solve", "--scenario", "interval_loss", "--h", "0.1,0.05", "--out", str(tmp_path)]) == EXIT_USAGE


def test_verify(tmp_path):
    code = main(["verify", "--scenario", "interval_loss", "--radii", "0.1,0.05,0.025", "--out", str(tmp_path)])
    assert code == EXIT_OK
    assert (tmp_path / "interval_loss_monge.csv").exists()


def test_convergence_without_improvement_fails(tmp_path):
    # u = x is reproduced exactly at every spacing, so the error cannot decrease
    args = ["convergence", "--scenario", "interval_loss", "--h", "0.5,0.25", "--out", str(tmp_path)]
    assert main(args) == EXIT_FAILED


def test_transversal(tmp_path):
    args = ["transversal", "--scenario", "blocked_square", "--out", str(tmp_path)]
    assert main(args) == EXIT_OK
    summary = json.loads((tmp_path / "blocked_square_transversal.json").read_text())
    assert summary['diagnostics']['family'] == ["midline"]
    assert summary['diagnostics']['transversal_gap'] > 0


def test_null_sets_follow_refinement(tmp_path, monkeypatch):
    path = tmp_path / "midline.json"
    path.write_text(json.dumps({"null_sets": [{
        "name": "midline",
        "blocked_edges": [{"segment": [[0.5, 0.0], [0.5, 1.0]]}],
        "passable_vertices": [[0.5, 0.5]],
    }]}))
    runs = []

    def recording_prepare_run(*args, **kwargs):
        runs.append(prepare_run(*args, **kwargs))
        return runs[-1]

    monkeypatch.setattr(runner, "prepare_run", recording_prepare_run)
    args = ["scenario", "--scenario", "blocked_square", "--h", "0.1", "--refine", "2",
            "--null-sets", str(path), "--out", str(tmp_path)]
    assert main(args) in (EXIT_OK, EXIT_FAILED)
    run = runs[0]
    blocked = run.family[0].blocked_edges
    assert len(blocked) == 20
    assert blocked == midline_marking(run.graph).blocked_edges
    ends = run.graph.endpoints[sorted(blocked)]
    np.testing.assert_allclose(run.graph.coords[ends.ravel(), 0], 0.5, atol=1e-9)


def test_regularity(tmp_path):
    args = ["regularity", "--scenario", "interval_sqrt", "--h", "0.001", "--out", str(tmp_path)]
    assert main(args) == EXIT_OK
    report = json.loads((tmp_path / "interval_sqrt_regularity.json").read_text())
    assert report['assumption_tag'] == "A1(1.9)"


def test_convergence(tmp_path):
    args = ["convergence", "--scenario", "interval_sqrt", "--h", "0.02,0.01,0.005", "--out", str(tmp_path)]
    assert main(args) == EXIT_OK
    assert len(pd.read_csv(tmp_path / "interval_sqrt_convergence.csv")) == 3


def test_convergence_needs_spacings(tmp_path):
    assert main(["convergence", "--scenario", "interval_sqrt", "--out", str(tmp_path)]) == EXIT_USAGE


def test_shell_dispatch_remembers_exit_code(tmp_path, monkeypatch):
    monkeypatch.setenv("HOME", str(tmp_path))
    monkeypatch.setattr(EikographCLI, "_setup_prompt_toolkit", lambda self: None)
    shell = EikographCLI()
    shell._handle_command("ls")
    assert shell.last_exit == EXIT_OK
    shell._handle_command(f"solve --scenario nowhere --out {tmp_path}")
    assert shell.last_exit == EXIT_USAGE
    assert shell._get_command_suggestions("slove") == ["solve"]
