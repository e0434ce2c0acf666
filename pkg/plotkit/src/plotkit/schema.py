"""CSV loading with strict column validation.

The renderer is a pure view over the simulator's CSV artifacts; it never
recomputes physics.  Every reader checks the header against the columns
its figure kind needs and fails naming the missing column.
"""

from __future__ import annotations

import csv

import numpy as np

INFO_FLOW_COLUMNS = ("t", "D", "Delta", "window_flag")
HEAT_FLUX_COLUMNS = ("t", "jq", "jq_se", "jq_imag_residual")
LOSS_GAIN_COLUMNS = (
    "panel",
    "sweep_param",
    "sweep_value",
    "pair",
    "driven",
    "info_loss",
    "info_gain",
    "onset_time",
)


class SchemaError(ValueError):
    """A CSV does not carry the columns its figure kind requires."""


def _read_table(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise SchemaError(f"{path}: empty file")
    return rows[0], rows[1:]


def _require(header, required, path):
    for col in required:
        if col not in header:
            raise SchemaError(f"{path}: missing required column {col!r}")


def load_numeric_csv(path, required) -> dict[str, np.ndarray]:
    """Load a numeric CSV as column arrays, validating required names."""
    header, rows = _read_table(path)
    _require(header, required, path)
    data = np.array([[float(cell) for cell in row] for row in rows])
    if data.ndim != 2 or data.shape[1] != len(header):
        raise SchemaError(f"{path}: ragged rows")
    return {name: data[:, k] for k, name in enumerate(header)}


def load_info_flow(path):
    return load_numeric_csv(path, INFO_FLOW_COLUMNS)


def load_heat_flux(path):
    return load_numeric_csv(path, HEAT_FLUX_COLUMNS)


def load_loss_gain(path) -> list[dict]:
    """Loss/gain bar rows; onset_time may be empty (no backflow)."""
    header, rows = _read_table(path)
    _require(header, LOSS_GAIN_COLUMNS, path)
    idx = {name: header.index(name) for name in header}
    out = []
    for row in rows:
        out.append(
            {
                "panel": row[idx["panel"]],
                "sweep_param": row[idx["sweep_param"]],
                "sweep_value": float(row[idx["sweep_value"]]),
                "pair": row[idx["pair"]],
                "driven": bool(int(row[idx["driven"]])),
                "info_loss": float(row[idx["info_loss"]]),
                "info_gain": float(row[idx["info_gain"]]),
                "onset_time": (
                    float(row[idx["onset_time"]]) if row[idx["onset_time"]] else None
                ),
            }
        )
    return out
