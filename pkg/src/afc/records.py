"""CSV record formats exchanged between training, evaluation and analysis.

All floats are written with 17 significant digits so a write/read cycle
reproduces 64-bit values exactly.
"""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

FORCES_HEADER = ("t", "C_l", "C_d")
ACTIONS_HEADER = ("t", "marl_id", "U_jet")
REWARD_CURVE_HEADER = ("step", "cfd_id", "marl_id", "mean_local_reward")


def _fmt(x):
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def write_csv(path, header, rows):
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) for x in row])


def append_csv(path, header, rows):
    path = Path(path)
    new = not path.exists()
    with path.open("a", newline="") as fh:
        w = csv.writer(fh)
        if new:
            w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) for x in row])


def read_csv(path):
    """Return ``{column: array}`` for a CSV written by this module; text columns stay strings."""
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        return {}
    header, body = rows[0], rows[1:]
    out = {}
    for k, name in enumerate(header):
        col = [r[k] for r in body]
        try:
            out[name] = np.array([float(x) for x in col], dtype=float)
        except ValueError:
            out[name] = np.array(col)
    return out
