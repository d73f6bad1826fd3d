"""Mori projection, orthogonal dynamics and memory-kernel extraction.

For an observable z, the rank-one projection P x = (x, z)(z, z)^{-1} z
splits the evolution of U(t)z into drift, a memory convolution and a
fluctuating force eta(t).  In finite dimensions the complementary
generator QL is bounded, so the orthogonal dynamics is a plain matrix
exponential; restricted to the orthogonal complement of z it coincides
with the norm-preserving group generated by the skew matrix QLQ, which is
how the eta trajectory is evaluated exactly on a grid.

The kernel can be obtained three ways, which must agree: from the noise
autocorrelation (the fluctuation-dissipation identity), from the
scalar-series Volterra equation it satisfies, and from the
autocorrelation inversion in :mod:`mzworkbench.volterra`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import DegenerateProjectionError, WorkbenchError
from .hilbert import Generator, HilbertSpace, _symmetrize_skew, inner, norm, propagate_series
from .series import ScalarSeries, TimeGrid
from .volterra import solve_volterra2


@dataclass(frozen=True, eq=False)
class MoriDecomposition:
    """Drift, kernel, noise trajectory and residual for one pair (L, z)."""

    z: np.ndarray = field(repr=False)
    omega: float
    kernel: ScalarSeries
    eta: np.ndarray = field(repr=False)  # (n_nodes, dim)
    grid: TimeGrid
    residual: ScalarSeries
    space: HilbertSpace = field(repr=False)

    @property
    def eta_norms(self) -> np.ndarray:
        w = self.space.weight_vector
        return np.sqrt(np.einsum("kd,d,kd->k", self.eta, w, self.eta))

    def to_payload(self) -> dict:
        return {
            "omega": self.omega,
            "grid": {"dt": self.grid.dt, "n_steps": self.grid.n_steps},
            "kernel": self.kernel.values.tolist(),
            "eta_norms": self.eta_norms.tolist(),
            "residual": self.residual.values.tolist(),
        }


def _check_observable(generator: Generator, z: np.ndarray) -> np.ndarray:
    z = generator.space.check_vector(z)
    if norm(generator.space, z) == 0.0:
        raise DegenerateProjectionError("observable z must be nonzero")
    return z


def mori_project(x: np.ndarray, z: np.ndarray, space: HilbertSpace) -> np.ndarray:
    """P x = (x, z)(z, z)^{-1} z."""
    x = space.check_vector(x)
    z = space.check_vector(z)
    zz = inner(space, z, z)
    if zz == 0.0:
        raise DegenerateProjectionError("cannot project onto a zero observable")
    return (inner(space, x, z) / zz) * z


def drift_coefficient(generator: Generator, z: np.ndarray) -> float:
    """(Lz, z)(z, z)^{-1}; identically zero for skew L on a real space."""
    z = _check_observable(generator, z)
    space = generator.space
    return inner(space, generator.apply(z), z) / inner(space, z, z)


def _projected_generator(generator: Generator, z: np.ndarray) -> np.ndarray:
    """Matrix of QL = L - P L (rank-one correction of L)."""
    space = generator.space
    w = space.weight_vector
    zz = inner(space, z, z)
    # P L x = (Lx, z)/(z,z) z, so the correction is z (L^T W z)^T / (z,z)
    return generator.matrix - np.outer(z, generator.matrix.T @ (w * z)) / zz


def _orthogonal_generator(generator: Generator, z: np.ndarray) -> Generator:
    """Skew generator Q L Q governing the orthogonal group on z-perp."""
    space = generator.space
    w = space.weight_vector
    zz = inner(space, z, z)
    q = np.eye(space.dim) - np.outer(z, w * z) / zz
    mat = _symmetrize_skew(q @ generator.matrix @ q, space)
    return Generator(matrix=mat, space=space)


def orthogonal_dynamics(generator: Generator, z: np.ndarray, t: float, x: np.ndarray) -> np.ndarray:
    """G(t) x = exp(t QL) x for the rank-one Mori complement."""
    z = _check_observable(generator, z)
    x = generator.space.check_vector(x)
    if not np.isfinite(t):
        raise WorkbenchError(f"time must be finite, got {t}")
    return scipy.linalg.expm(float(t) * _projected_generator(generator, z)) @ x


def initial_force(generator: Generator, z: np.ndarray) -> np.ndarray:
    """eta(0) = QLz = Lz - omega z."""
    z = _check_observable(generator, z)
    lz = generator.apply(z)
    return lz - mori_project(lz, z, generator.space)


def fluctuating_force(generator: Generator, z: np.ndarray, t: float) -> np.ndarray:
    """eta(t) = G(t) QLz, evaluated through the skew group on z-perp."""
    z = _check_observable(generator, z)
    eta0 = initial_force(generator, z)
    return propagate_series(_orthogonal_generator(generator, z), eta0, np.asarray([float(t)]))[0]


def fluctuating_force_series(generator: Generator, z: np.ndarray, grid: TimeGrid) -> np.ndarray:
    """eta on every grid node, shape (n_nodes, dim); no error accumulation."""
    z = _check_observable(generator, z)
    eta0 = initial_force(generator, z)
    return propagate_series(_orthogonal_generator(generator, z), eta0, grid.times)


def memory_kernel_exact(generator: Generator, z: np.ndarray, grid: TimeGrid) -> ScalarSeries:
    """K(t_k) = (eta(t_k), adjoint(L) z)(z, z)^{-1} with adjoint(L) = -L."""
    z = _check_observable(generator, z)
    space = generator.space
    eta = fluctuating_force_series(generator, z, grid)
    w = space.weight_vector
    lz = generator.apply(z)
    zz = inner(space, z, z)
    return ScalarSeries(grid, -(eta @ (w * lz)) / zz)


def _trapezoid_convolution(kernel_vals: np.ndarray, rows: np.ndarray, dt: float) -> np.ndarray:
    """Trapezoid of int_0^{t_k} K(s) rows(t_k - s) ds for every node k.

    ``rows`` has one vector per node; the full sums come from an FFT
    convolution along the time axis.
    """
    import scipy.signal

    full = scipy.signal.fftconvolve(kernel_vals[:, None], rows, axes=0)[: len(kernel_vals)]
    corr = 0.5 * kernel_vals[0] * rows + 0.5 * np.outer(kernel_vals, rows[0])
    out = dt * (full - corr)
    out[0] = 0.0
    return out


def gle_residual(generator: Generator, z: np.ndarray, grid: TimeGrid) -> ScalarSeries:
    """Node-wise norm of d/dt U(t)z - omega U(t)z - (K * Uz)(t) - eta(t).

    The time derivative is U(t)Lz analytically; only the memory integral
    is discretized (composite trapezoid), so the residual decays at the
    quadrature order dt^2.
    """
    z = _check_observable(generator, z)
    space = generator.space
    omega = drift_coefficient(generator, z)
    uz = propagate_series(generator, z, grid.times)
    ulz = propagate_series(generator, generator.apply(z), grid.times)
    eta = fluctuating_force_series(generator, z, grid)
    kernel = memory_kernel_exact(generator, z, grid)
    memory = _trapezoid_convolution(kernel.values, uz, grid.dt)
    resid = ulz - omega * uz - memory - eta
    w = space.weight_vector
    norms = np.sqrt(np.abs(np.einsum("kd,d,kd->k", resid, w, resid)))
    return ScalarSeries(grid, norms)


def kernel_via_2fdt_volterra(generator: Generator, z: np.ndarray, grid: TimeGrid) -> ScalarSeries:
    """Kernel from the scalar Volterra equation the 2FDT turns into.

    Solves g(t) = -(U(t)Lz, f0)/(z,z) + int_0^t g(s) (U(t-s)z, f0)/(z,z) ds
    with f0 = Lz.  Its unique continuous solution is the memory kernel, so
    this must agree with :func:`memory_kernel_exact` at the grid order.
    """
    z = _check_observable(generator, z)
    space = generator.space
    w = space.weight_vector
    zz = inner(space, z, z)
    f0 = generator.apply(z)
    uz = propagate_series(generator, z, grid.times)
    ulz = propagate_series(generator, f0, grid.times)
    forcing = ScalarSeries(grid, -(ulz @ (w * f0)) / zz)
    a_vals = (uz @ (w * f0)) / zz
    return solve_volterra2(a_vals, forcing)


def autocorrelation_exact(generator: Generator, z: np.ndarray, grid: TimeGrid):
    """C, C' and C'' of C(t) = (U(t)z, z), all from exact propagation.

    C'(t) = (U(t)Lz, z) and C''(t) = -(U(t)Lz, Lz); no finite differences.
    """
    z = _check_observable(generator, z)
    w = generator.space.weight_vector
    lz = generator.apply(z)
    uz = propagate_series(generator, z, grid.times)
    ulz = propagate_series(generator, lz, grid.times)
    c = ScalarSeries(grid, uz @ (w * z))
    dc = ScalarSeries(grid, ulz @ (w * z))
    d2c = ScalarSeries(grid, -(ulz @ (w * lz)))
    return c, dc, d2c


def mori_decomposition(generator: Generator, z: np.ndarray, grid: TimeGrid) -> MoriDecomposition:
    """Assemble drift, kernel, noise trajectory and GLE residual."""
    z = _check_observable(generator, z)
    return MoriDecomposition(
        z=z,
        omega=drift_coefficient(generator, z),
        kernel=memory_kernel_exact(generator, z, grid),
        eta=fluctuating_force_series(generator, z, grid),
        grid=grid,
        residual=gle_residual(generator, z, grid),
        space=generator.space,
    )
