"""Second-kind Volterra solvers and the kernel/autocorrelation inversions.

The marching discretization is trapezoidal product integration, implicit
in the newest node: second-order accurate, single pass, O(N^2).  The two
inversions connect a memory kernel K and an autocorrelation function C
through

    dC/dt = int_0^t K(s) C(t-s) ds            (C from K, integrated form)
    K(t) C(0) = C''(t) - int_0^t K(s) C'(t-s) ds   (K from C)

and each discrete solve is deterministic and total on valid inputs.
"""

from __future__ import annotations

import warnings

import numpy as np

from .errors import (
    DegenerateProjectionError,
    GridMismatchError,
    SeriesTooShortError,
    StepSingularityError,
)
from .series import ScalarSeries, TimeGrid, require_same_grid

PIVOT_TOL = 1e-12


def solve_volterra2(a, b: ScalarSeries, grid: TimeGrid | None = None) -> ScalarSeries:
    """March x(t) = b(t) + int_0^t a(t, s) x(s) ds on the grid of ``b``.

    ``a`` is either a callable a(t, s), evaluated only at node pairs, or a
    1-D array giving a difference kernel a(t - s) on the grid nodes (that
    path avoids per-pair Python calls).  The newest node is treated
    implicitly; a pivot |1 - (dt/2) a(t_k, t_k)| below ``PIVOT_TOL``
    raises :class:`StepSingularityError`.
    """
    if grid is not None:
        require_same_grid(b, grid)
    grid = b.grid
    dt = grid.dt
    n = grid.n_nodes
    if not callable(a):
        return _solve_difference_kernel(np.asarray(a, dtype=float), b)
    t = grid.times
    x = np.empty(n)
    x[0] = b.values[0]
    for k in range(1, n):
        row = np.asarray([a(t[k], t[j]) for j in range(k + 1)], dtype=float)
        if not np.all(np.isfinite(row)):
            raise StepSingularityError(f"kernel a(t, s) is non-finite at t={t[k]}")
        pivot = 1.0 - 0.5 * dt * row[k]
        if abs(pivot) < PIVOT_TOL:
            raise StepSingularityError(
                f"implicit step pivot {pivot:.3e} at t={t[k]} is numerically singular"
            )
        acc = 0.5 * row[0] * x[0] + (row[1:k] @ x[1:k] if k > 1 else 0.0)
        x[k] = (b.values[k] + dt * acc) / pivot
    return ScalarSeries(grid, x)


def _solve_difference_kernel(a_vals: np.ndarray, b: ScalarSeries) -> ScalarSeries:
    grid = b.grid
    n = grid.n_nodes
    if a_vals.shape != (n,):
        raise GridMismatchError(f"difference kernel has shape {a_vals.shape}, expected ({n},)")
    if not np.all(np.isfinite(a_vals)):
        raise StepSingularityError("difference kernel contains non-finite values")
    dt = grid.dt
    pivot = 1.0 - 0.5 * dt * a_vals[0]
    if abs(pivot) < PIVOT_TOL:
        raise StepSingularityError(
            f"implicit step pivot {pivot:.3e} is numerically singular"
        )
    rev = a_vals[::-1]
    x = np.empty(n)
    x[0] = b.values[0]
    for k in range(1, n):
        acc = 0.5 * a_vals[k] * x[0] + (rev[n - k : n - 1] @ x[1:k] if k > 1 else 0.0)
        x[k] = (b.values[k] + dt * acc) / pivot
    return ScalarSeries(grid, x)


def cumulative_integral(series: ScalarSeries) -> ScalarSeries:
    """Trapezoidal running integral int_0^{t_k} of the series."""
    dt = series.grid.dt
    vals = series.values
    out = np.zeros_like(vals)
    if len(vals) > 1:
        out[1:] = np.cumsum(0.5 * dt * (vals[1:] + vals[:-1]))
    return ScalarSeries(series.grid, out)


def acf_from_kernel(kernel: ScalarSeries, c0: float, grid: TimeGrid | None = None) -> ScalarSeries:
    """Autocorrelation C from a memory kernel K with C(0) = c0.

    Solves the integrated second-kind form
    C(t) = C(0) + int_0^t (int_0^{t-s} K) C(s) ds.
    """
    if grid is not None:
        require_same_grid(kernel, grid)
    if c0 == 0.0:
        warnings.warn("C(0) = 0 gives the trivial solution C = 0", stacklevel=2)
    ik = cumulative_integral(kernel)
    b = ScalarSeries(kernel.grid, np.full(kernel.grid.n_nodes, float(c0)))
    return solve_volterra2(ik.values, b)


def kernel_from_acf(
    acf: ScalarSeries,
    d_acf: ScalarSeries | None = None,
    d2_acf: ScalarSeries | None = None,
    check_tol: float = 1e-3,
) -> ScalarSeries:
    """Memory kernel K from an autocorrelation C.

    When the analytic derivatives are not supplied they are produced by
    second-order finite differences.  A stationary unitary origin forces
    C'(0) = 0; inputs violating |C'(0)| <= check_tol * |C(0)| / dt only
    warn, since measured data break the constraint by noise.
    """
    if d_acf is None:
        d_acf = differentiate_series(acf, order=1)
    if d2_acf is None:
        d2_acf = differentiate_series(acf, order=2)
    grid = require_same_grid(acf, d_acf, d2_acf)
    c0 = acf.values[0]
    if c0 == 0.0:
        raise DegenerateProjectionError("kernel extraction needs C(0) != 0")
    if abs(d_acf.values[0]) > check_tol * abs(c0) / grid.dt:
        warnings.warn(
            f"C'(0) = {d_acf.values[0]:.3e} is not small; "
            "input is not the autocorrelation of a stationary unitary flow",
            stacklevel=2,
        )
    b = ScalarSeries(grid, d2_acf.values / c0)
    return solve_volterra2(-d_acf.values / c0, b)


def differentiate_series(series: ScalarSeries, order: int = 1) -> ScalarSeries:
    """Second-order finite differences, one-sided stencils at the ends."""
    if order not in (1, 2):
        raise ValueError(f"order must be 1 or 2, got {order}")
    if series.grid.n_steps < 4:
        raise SeriesTooShortError(
            f"need at least 5 nodes for the boundary stencils, got {series.grid.n_nodes}"
        )
    c = series.values
    dt = series.grid.dt
    out = np.empty_like(c)
    if order == 1:
        out[1:-1] = (c[2:] - c[:-2]) / (2.0 * dt)
        out[0] = (-3.0 * c[0] + 4.0 * c[1] - c[2]) / (2.0 * dt)
        out[-1] = (3.0 * c[-1] - 4.0 * c[-2] + c[-3]) / (2.0 * dt)
    else:
        out[1:-1] = (c[2:] - 2.0 * c[1:-1] + c[:-2]) / dt**2
        out[0] = (2.0 * c[0] - 5.0 * c[1] + 4.0 * c[2] - c[3]) / dt**2
        out[-1] = (2.0 * c[-1] - 5.0 * c[-2] + 4.0 * c[-3] - c[-4]) / dt**2
    return ScalarSeries(series.grid, out)
