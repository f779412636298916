from .types import Oracle, QuantityResult, Scenario, ScenarioReport, ScenarioRun
from .registry import get_scenario, list_scenarios, register
from .runner import convergence, prepare_run, run_scenario
from .loader import load_scenario_file, parse_null_sets, scenario_from_dict

__all__ = [
    'Oracle',
    'QuantityResult',
    'Scenario',
    'ScenarioReport',
    'ScenarioRun',
    'get_scenario',
    'list_scenarios',
    'register',
    'convergence',
    'prepare_run',
    'run_scenario',
    'load_scenario_file',
    'parse_null_sets',
    'scenario_from_dict',
]
