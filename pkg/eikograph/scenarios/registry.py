import logging
from difflib import get_close_matches
from typing import Callable, Dict, List

from eikograph.core.utils import UnknownScenario
from eikograph.scenarios.types import Scenario

logger = logging.getLogger(__name__)

ScenarioFactory = Callable[[], Scenario]

_REGISTRY: Dict[str, ScenarioFactory] = {}


def register(factory: ScenarioFactory) -> ScenarioFactory:
    """Register a scenario factory under its function name"""
    _REGISTRY[factory.__name__] = factory
    return factory


def _load_builtins() -> None:
    # Importing the module runs its @register decorators
    from eikograph.scenarios import builtins  # noqa: F401


def list_scenarios() -> List[str]:
    _load_builtins()
    return sorted(_REGISTRY)


def get_scenario(name: str) -> Scenario:
    """Build the registered scenario with the given name

    Raises:
        UnknownScenario: If no scenario is registered under that name
    """
    _load_builtins()
    factory = _REGISTRY.get(name)
    if factory is None:
        suggestions = get_close_matches(name, _REGISTRY.keys(), n=3, cutoff=0.6)
        hint = f"; did you mean {', '.join(suggestions)}?" if suggestions else ""
        raise UnknownScenario(f"No scenario named '{name}'{hint}")
    return factory()
