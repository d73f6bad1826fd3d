"""Uniform time grids and scalar time series.

A :class:`TimeGrid` is the single time axis shared by kernels,
autocorrelation functions and trajectories; node times are always computed
as ``k * dt`` and never accumulated, so grids compare exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GridMismatchError, WorkbenchError


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid t_k = k * dt for k = 0 .. n_steps.

    ``n_steps = 0`` (a single node at t = 0) is tolerated so that
    degenerate covariance models can be built; marching solvers simply
    return their initial value on such a grid.
    """

    dt: float
    n_steps: int

    def __post_init__(self):
        if not np.isfinite(self.dt) or self.dt <= 0:
            raise WorkbenchError(f"dt must be positive and finite, got {self.dt}")
        if self.n_steps < 0 or int(self.n_steps) != self.n_steps:
            raise WorkbenchError(f"n_steps must be a nonnegative integer, got {self.n_steps}")
        object.__setattr__(self, "n_steps", int(self.n_steps))

    @property
    def n_nodes(self) -> int:
        return self.n_steps + 1

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_nodes) * self.dt

    @property
    def horizon(self) -> float:
        return self.n_steps * self.dt

    def halved(self) -> "TimeGrid":
        """Grid with half the step and the same horizon."""
        return TimeGrid(self.dt / 2.0, self.n_steps * 2)


@dataclass(frozen=True, eq=False)
class ScalarSeries:
    """Real values sampled on a :class:`TimeGrid`, one per node."""

    grid: TimeGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.n_nodes,):
            raise GridMismatchError(
                f"series has {values.shape} values for a grid with {self.grid.n_nodes} nodes"
            )
        if not np.all(np.isfinite(values)):
            raise WorkbenchError("series contains non-finite values")
        object.__setattr__(self, "values", values)

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    def __len__(self) -> int:
        return self.grid.n_nodes

    def __call__(self, k: int) -> float:
        return float(self.values[k])


def require_same_grid(*series: ScalarSeries | TimeGrid) -> TimeGrid:
    """Return the common grid of the arguments or raise GridMismatchError."""
    grids = [s if isinstance(s, TimeGrid) else s.grid for s in series]
    first = grids[0]
    for g in grids[1:]:
        if g.n_steps != first.n_steps or g.dt != first.dt:
            raise GridMismatchError(
                f"grids differ: dt={first.dt}, n_steps={first.n_steps} "
                f"vs dt={g.dt}, n_steps={g.n_steps}"
            )
    return first


def constant_series(grid: TimeGrid, value: float) -> ScalarSeries:
    return ScalarSeries(grid, np.full(grid.n_nodes, float(value)))


def series_from_function(grid: TimeGrid, fn) -> ScalarSeries:
    return ScalarSeries(grid, np.asarray([fn(t) for t in grid.times], dtype=float))
