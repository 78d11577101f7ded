"""
Report emission for command handlers.

JSON artifacts use sorted keys and repr-exact floats so identical runs give
byte-identical files; CSV artifacts are plot-ready tables.
"""

import csv
import json
import logging
import os
from typing import Any, Dict, Sequence

import numpy as np

from ..core.exceptions import ConfigurationError

logger = logging.getLogger(__name__)


def _encode(value: Any) -> Any:
    """JSON fallback for numpy scalars and arrays."""
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def dump_json(payload: Dict[str, Any]) -> str:
    """Deterministic JSON text of a report."""
    return json.dumps(payload, sort_keys=True, indent=2, default=_encode)


def _target(out_dir: str, name: str) -> str:
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as e:
        raise ConfigurationError("out", f"cannot create output directory {out_dir}", technical_details=str(e))
    return os.path.join(out_dir, name)


def write_json(out_dir: str, name: str, payload: Dict[str, Any]) -> str:
    """Write a JSON artifact and return its path."""
    path = _target(out_dir, name)
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(dump_json(payload))
        handle.write("\n")
    logger.info(f"Wrote {path}")
    return path


def write_csv(out_dir: str, name: str, rows: Sequence[Sequence[Any]]) -> str:
    """Write a CSV artifact (first row is the header) and return its path."""
    path = _target(out_dir, name)
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        for row in rows:
            writer.writerow(["" if cell is None else (repr(cell) if isinstance(cell, float) else cell) for cell in row])
    logger.info(f"Wrote {path}")
    return path


def read_json(path: str, what: str) -> Dict[str, Any]:
    """Load a JSON input file, reporting unreadable files as configuration errors."""
    if not os.path.exists(path):
        raise ConfigurationError(what, f"file not found: {path}")
    try:
        with open(path, encoding="utf-8") as handle:
            return json.load(handle)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigurationError(what, f"cannot parse {path}", technical_details=str(e))
