from __future__ import annotations

import json
import os

import numpy as np
import pandas as pd

from bgw_bench.errors import ConfigError, DomainError
from bgw_bench.fields import GridField, GridSpec
from bgw_bench.reports import FLOAT_FORMAT

INDEX_COLUMNS = ("i", "j")
COORDINATE_COLUMNS = ("x", "y")


def grid_field_from_dict(data: dict) -> GridField:
    """Build a grid field from {"n", "L", "h", "values"}, values flat or nested."""
    try:
        spec = GridSpec.from_dict(data)
        values = data["values"]
    except KeyError as e:
        raise ConfigError(f"Grid field description misses the key {e}.")
    return GridField(spec, np.asarray(values, dtype=float))


def load_grid_field_json(path: str) -> GridField:
    with open(path, "r") as f:
        return grid_field_from_dict(json.load(f))


def save_grid_field_json(field: GridField, path: str):
    with open(path, "w") as f:
        json.dump(field.to_dict(), f, indent=2)


def load_grid_field_csv(path: str) -> GridField:
    """Load a grid field from a table with one row per node.

    Parameters
    ----------
    path
        CSV file with columns `i, x, value` in 1D or `i, j, x, y, value` in 2D. Rows
        may come in any order, every node of the grid has to be present.

    Returns
    -------
    field
        The grid is inferred from the node coordinates: L is minus the smallest
        coordinate and h = 2 L / m, m the largest index along the first axis.
    """
    frame = pd.read_csv(path, float_precision="round_trip")
    n = 2 if "j" in frame.columns else 1
    index_columns = list(INDEX_COLUMNS[:n])
    missing = {*index_columns, *COORDINATE_COLUMNS[:n], "value"} - set(frame.columns)
    if missing:
        raise ConfigError(f"Grid field table {path} misses columns {sorted(missing)}.")

    cells = int(frame["i"].max())
    if cells < 1:
        raise DomainError(f"Grid field table {path} needs at least two nodes per axis.")
    L = float(-frame["x"].min())
    spec = GridSpec(n, L, 2 * L / cells)
    if len(frame) != spec.size:
        raise DomainError(
            f"Grid field table {path} has {len(frame)} rows, {spec} needs {spec.size}."
        )

    frame = frame.sort_values(index_columns)
    return GridField(spec, frame["value"].to_numpy(dtype=float))


def save_grid_field_csv(field: GridField, path: str):
    spec = field.spec
    idx = np.unravel_index(np.arange(spec.size), spec.shape)
    columns = {name: idx[axis] for axis, name in enumerate(INDEX_COLUMNS[: spec.n])}
    columns.update(
        {
            name: spec.points[:, axis]
            for axis, name in enumerate(COORDINATE_COLUMNS[: spec.n])
        }
    )
    columns["value"] = field.flat
    pd.DataFrame(columns).to_csv(
        path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n"
    )


def load_grid_field(path: str) -> GridField:
    """Load a grid field stored as JSON or CSV, chosen by the file suffix."""
    if not os.path.exists(path):
        raise ConfigError(f"Grid field file {path} does not exist.")
    suffix = os.path.splitext(path)[1].lower()
    if suffix == ".json":
        return load_grid_field_json(path)
    if suffix == ".csv":
        return load_grid_field_csv(path)
    raise ConfigError(f"Unknown grid field format {suffix}, expected .json or .csv.")
