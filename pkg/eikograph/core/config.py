import os
import logging
from dataclasses import dataclass, replace
from typing import Any, Dict

from dotenv import load_dotenv

load_dotenv()

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Settings:
    """Run-wide defaults, overridable from the environment and CLI flags"""
    quad_points_per_unit: float = 64.0
    quad_rtol: float = 1e-6
    quad_atol: float = 1e-12
    quad_max_rounds: int = 60
    radii_count: int = 7
    radius_fraction: float = 0.1
    monge_tol: float = 0.05
    exact_tol: float = 1e-9
    all_pairs_limit: int = 5000
    pair_budget: int = 2000
    workers: int = 1
    seed: int = 0
    output_dir: str = "out"
    log_level: str = "INFO"

    def override(self, **changes: Any) -> "Settings":
        """Copy with every non-None keyword applied"""
        return replace(self, **{key: value for key, value in changes.items() if value is not None})


def _get_numeric_settings() -> Dict[str, Any]:
    """Get numeric settings from environment variables with defaults"""
    return {
        'quad_points_per_unit': float(os.getenv('EIKOGRAPH_QUAD_DENSITY', '64')),
        'quad_rtol': float(os.getenv('EIKOGRAPH_QUAD_RTOL', '1e-6')),
        'quad_atol': float(os.getenv('EIKOGRAPH_QUAD_ATOL', '1e-12')),
        'quad_max_rounds': int(os.getenv('EIKOGRAPH_QUAD_MAX_ROUNDS', '60')),
        'radii_count': int(os.getenv('EIKOGRAPH_RADII_COUNT', '7')),
        'radius_fraction': float(os.getenv('EIKOGRAPH_RADIUS_FRACTION', '0.1')),
        'monge_tol': float(os.getenv('EIKOGRAPH_MONGE_TOL', '0.05')),
        'exact_tol': float(os.getenv('EIKOGRAPH_EXACT_TOL', '1e-9')),
        'all_pairs_limit': int(os.getenv('EIKOGRAPH_ALL_PAIRS_LIMIT', '5000')),
        'pair_budget': int(os.getenv('EIKOGRAPH_PAIR_BUDGET', '2000')),
    }


def _get_run_settings() -> Dict[str, Any]:
    """Get worker, seed and output settings from environment variables with defaults"""
    return {
        'workers': int(os.getenv('EIKOGRAPH_WORKERS', '1')),
        'seed': int(os.getenv('EIKOGRAPH_SEED', '0')),
        'output_dir': os.getenv('EIKOGRAPH_OUTPUT_DIR', 'out'),
        'log_level': os.getenv('EIKOGRAPH_LOG_LEVEL', 'INFO').upper(),
    }


def get_settings() -> Settings:
    """Build settings from the environment, falling back to defaults on bad values"""
    try:
        return Settings(**_get_numeric_settings(), **_get_run_settings())
    except ValueError as e:
        logger.warning(f"Ignoring malformed EIKOGRAPH_* setting: {e}")
        return Settings()
