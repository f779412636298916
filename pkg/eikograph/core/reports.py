import json
import logging
from pathlib import Path
from typing import Any, Mapping, Union

import numpy as np
import pandas as pd

from eikograph.core.utils import to_jsonable

logger = logging.getLogger(__name__)

# Fixed float format keeps reruns with the same seed byte-identical
FLOAT_FORMAT = "%.12g"

PathLike = Union[str, Path]


def ensure_dir(out_dir: PathLike) -> Path:
    path = Path(out_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def write_frame(frame: pd.DataFrame, path: PathLike) -> Path:
    """Write a DataFrame as CSV without the index"""
    path = Path(path)
    ensure_dir(path.parent)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    logger.debug(f"Wrote {len(frame)} rows to {path}")
    return path


def pairs_frame(pairs: np.ndarray, quantity: str = "L") -> pd.DataFrame:
    """(d, value) regularity pairs sorted by d"""
    pairs = np.asarray(pairs, dtype=float).reshape(-1, 2)
    order = np.lexsort((pairs[:, 1], pairs[:, 0]))
    return pd.DataFrame({'d': pairs[order, 0], quantity: pairs[order, 1]})


def write_report(payload: Mapping[str, Any], path: PathLike) -> Path:
    """Write a JSON report with sorted keys; NaN becomes null and infinities become strings"""
    path = Path(path)
    ensure_dir(path.parent)
    text = json.dumps(to_jsonable(dict(payload)), indent=2, sort_keys=True)
    path.write_text(text + "\n", encoding="utf-8")
    logger.debug(f"Wrote report {path}")
    return path


def load_report(path: PathLike) -> dict:
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)
