from __future__ import annotations

import json
import os
from enum import Enum
from fractions import Fraction
from typing import Any

import numpy as np
import pandas as pd

FLOAT_FORMAT = "%.17g"


def _to_json(value: Any) -> Any:
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    if hasattr(value, "to_dict"):
        return value.to_dict()
    raise TypeError(f"Object of type {type(value).__name__} is not serializable.")


def _ensure_dir(path: str):
    directory = os.path.dirname(path)
    if directory and not os.path.exists(directory):
        os.makedirs(directory)


def dumps(data: Any) -> str:
    """Serialize a report with sorted keys, rationals become "p/q" strings."""
    return json.dumps(data, sort_keys=True, indent=2, default=_to_json)


def write_json(data: Any, path: str):
    _ensure_dir(path)
    with open(path, "w") as f:
        f.write(dumps(data))
        f.write("\n")


def _csv_cell(value: Any) -> Any:
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    if isinstance(value, Enum):
        return value.value
    return value


def write_csv(rows: list[dict] | pd.DataFrame, path: str):
    """Write a table with 17 significant digits and '.' as the decimal separator.

    Parameters
    ----------
    rows
        Either a data frame or a list of flat dictionaries, one per row.
    path
        Output file.
    """
    frame = rows if isinstance(rows, pd.DataFrame) else pd.DataFrame(rows)
    frame = frame.map(_csv_cell)
    _ensure_dir(path)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
