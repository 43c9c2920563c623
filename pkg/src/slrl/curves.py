"""Per-episode learning-curve records and their CSV form."""
from __future__ import annotations

import csv
from typing import NamedTuple

import numpy as np

CURVE_HEADER = ("episode", "task_id", "seed", "cum_reward", "steps")


class CurveRecord(NamedTuple):
    episode: int
    task_id: int
    seed: int
    cum_reward: float
    steps: int


def write_curve(path, records, extra_columns: dict | None = None) -> None:
    """Write records with the fixed header.

    ``extra_columns`` maps a column name to a constant appended to every
    row, e.g. ``{"condition": "I"}`` for multi-condition files.
    """
    extra = extra_columns or {}
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(CURVE_HEADER) + list(extra))
        for r in records:
            writer.writerow(
                [int(r.episode), int(r.task_id), int(r.seed), repr(float(r.cum_reward)), int(r.steps)]
                + [str(v) for v in extra.values()]
            )


def read_curve(path) -> list[CurveRecord]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(CURVE_HEADER) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing curve columns {sorted(missing)}")
        return [
            CurveRecord(int(row["episode"]), int(row["task_id"]), int(row["seed"]),
                        float(row["cum_reward"]), int(row["steps"]))
            for row in reader
        ]


def moving_average(values, window: int) -> np.ndarray:
    """Trailing mean; the first ``window - 1`` points average the available prefix."""
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    x = np.asarray(values, dtype=float)
    if x.size == 0:
        return x
    csum = np.concatenate([[0.0], np.cumsum(x)])
    idx = np.arange(1, x.size + 1)
    lo = np.maximum(idx - window, 0)
    return (csum[idx] - csum[lo]) / (idx - lo)


def rewards(records) -> np.ndarray:
    return np.array([r.cum_reward for r in records], dtype=float)
