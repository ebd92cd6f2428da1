"""Sampled scalar fields on rectangular space x time grids, with CSV export."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import UsageError

__all__ = ["GridField"]


@dataclass(frozen=True)
class GridField:
    """Real field sampled on a rectangular grid.

    ``values[i, j]`` is the sample at time level ``t_axis[i]`` and spatial
    node ``x_axis[j]``.  ``axis_names`` label the two axes in exports
    (defaults fit the inner-region variables sigma, omega).
    """

    x_axis: np.ndarray
    t_axis: np.ndarray
    values: np.ndarray
    label: str
    axis_names: tuple[str, str] = ("sigma", "omega")

    def __post_init__(self):
        object.__setattr__(self, "x_axis", np.asarray(self.x_axis, dtype=float))
        object.__setattr__(self, "t_axis", np.atleast_1d(np.asarray(self.t_axis, dtype=float)))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if self.x_axis.size < 3:
            raise UsageError("spatial axis needs at least 3 nodes")
        if self.t_axis.size < 1:
            raise UsageError("time axis needs at least 1 level")
        if np.any(np.diff(self.x_axis) <= 0) or (self.t_axis.size > 1 and np.any(np.diff(self.t_axis) <= 0)):
            raise UsageError("grid axes must be strictly increasing")
        if self.values.shape != (self.t_axis.size, self.x_axis.size):
            raise UsageError(
                f"values shape {self.values.shape} does not match axes "
                f"({self.t_axis.size}, {self.x_axis.size})"
            )
        if not np.all(np.isfinite(self.values)):
            raise UsageError("field values must be finite")

    def level(self, t: float) -> np.ndarray:
        """Samples at an existing time level."""
        idx = np.nonzero(np.isclose(self.t_axis, t, rtol=1e-12, atol=0.0))[0]
        if idx.size == 0:
            raise UsageError(f"level {t!r} is not on the time axis")
        return self.values[idx[0]]

    def to_csv(self, path) -> None:
        """One sample per line, row-major by time level then spatial node."""
        path = Path(path)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([self.axis_names[0], self.axis_names[1], "value", "label"])
            for i, t in enumerate(self.t_axis):
                for j, x in enumerate(self.x_axis):
                    writer.writerow([f"{x:.16e}", f"{t:.16e}", f"{self.values[i, j]:.16e}", self.label])

    @classmethod
    def from_csv(cls, path) -> "GridField":
        path = Path(path)
        with path.open() as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if len(header) != 4 or header[2:] != ["value", "label"]:
                raise UsageError(f"unrecognized field CSV header: {header}")
            rows = list(reader)
        if not rows:
            raise UsageError("field CSV has no samples")
        xs = np.array([float(r[0]) for r in rows])
        ts = np.array([float(r[1]) for r in rows])
        vals = np.array([float(r[2]) for r in rows])
        x_axis = np.unique(xs)
        t_axis = np.unique(ts)
        if x_axis.size * t_axis.size != len(rows):
            raise UsageError("field CSV is not a full rectangular grid")
        values = vals.reshape(t_axis.size, x_axis.size)
        return cls(x_axis=x_axis, t_axis=t_axis, values=values,
                   label=rows[0][3], axis_names=(header[0], header[1]))
