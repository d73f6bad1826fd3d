"""Coarse-grained Gaussian simulation of the scalar memory equation.

Given an autocorrelation function C, the same mean-zero Gaussian path law
can be produced three ways:

* ``gle``      extract the kernel, sample (initial value, noise path) from
               the joint Gaussian the kernel implies, and integrate
               dz/dt = int_0^t K(s) z(t-s) ds + eta(t);
* ``direct``   sample the whole path from the Gaussian with covariance
               C(t_m - t_n);
* ``spectral`` circulant embedding of the stationary covariance.

All sampling is counter-based per (seed, realization index), so ensembles
are bit-reproducible regardless of how rows are chunked over workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import (
    EstimatorError,
    FactorizationError,
    NonRealizableNoiseError,
    SpectralMassError,
    WorkbenchError,
)
from .series import ScalarSeries, TimeGrid, require_same_grid
from .threads import run_chunked
from .volterra import kernel_from_acf

CLIP_MASS_LIMIT = 0.01
MIN_ACF_SAMPLES = 30


@dataclass(frozen=True)
class RepairLog:
    """Eigenvalue clipping applied to make a covariance PSD."""

    clipped_count: int
    clipped_mass: float
    total_mass: float

    @property
    def relative_mass(self) -> float:
        return self.clipped_mass / self.total_mass if self.total_mass > 0 else 0.0


@dataclass(frozen=True, eq=False)
class CovarianceMatrix:
    """Symmetric PSD matrix over labelled slots, with its repair record."""

    labels: tuple[str, ...]
    matrix: np.ndarray = field(repr=False)
    repair_log: RepairLog

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.shape != (len(self.labels), len(self.labels)):
            raise WorkbenchError("covariance shape does not match its labels")
        object.__setattr__(self, "matrix", m)

    @property
    def size(self) -> int:
        return len(self.labels)


@dataclass(frozen=True, eq=False)
class TrajectoryEnsemble:
    """M realizations sampled on a common grid, one row each."""

    grid: TimeGrid
    data: np.ndarray = field(repr=False)  # (M, n_nodes)
    seed: int
    method: str

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.ndim != 2 or data.shape[0] < 1:
            raise WorkbenchError(f"ensemble data must be (M, n_nodes) with M >= 1, got {data.shape}")
        if data.shape[1] != self.grid.n_nodes:
            raise WorkbenchError(
                f"ensemble has {data.shape[1]} columns for a grid with {self.grid.n_nodes} nodes"
            )
        if not np.all(np.isfinite(data)):
            raise WorkbenchError("ensemble contains non-finite values")
        object.__setattr__(self, "data", data)

    @property
    def n_realizations(self) -> int:
        return self.data.shape[0]


def repair_psd(matrix: np.ndarray, mass_limit: float = CLIP_MASS_LIMIT):
    """Clip negative eigenvalues to zero; refuse repairs above mass_limit."""
    sym = (matrix + matrix.T) / 2.0
    eigvals, eigvecs = np.linalg.eigh(sym)
    negative = eigvals < 0.0
    clipped_mass = float(-np.sum(eigvals[negative]))
    total_mass = float(np.sum(np.abs(eigvals)))
    log = RepairLog(int(np.sum(negative)), clipped_mass, total_mass)
    if total_mass > 0 and log.relative_mass > mass_limit:
        raise NonRealizableNoiseError(
            f"covariance repair would clip {100 * log.relative_mass:.2f}% of the spectral mass"
        )
    if log.clipped_count:
        clipped = np.where(negative, 0.0, eigvals)
        sym = (eigvecs * clipped) @ eigvecs.T
        sym = (sym + sym.T) / 2.0
    return sym, log


def _rng_for_row(seed: int, index: int) -> np.random.Generator:
    key = np.asarray([seed, index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def build_noise_covariance(
    kernel: ScalarSeries, z_var: float, grid: TimeGrid | None = None
) -> CovarianceMatrix:
    """Joint covariance of (z, eta(t_1), ..., eta(t_N)).

    The noise block is Toeplitz with entries -K(|t_j - t_k|) z_var, the
    initial-value slot is independent with variance z_var.  A kernel with
    K(0) > 0 has no Gaussian noise model and is rejected.
    """
    if grid is not None:
        require_same_grid(kernel, grid)
    grid = kernel.grid
    if z_var <= 0:
        raise WorkbenchError(f"z_var must be positive, got {z_var}")
    if kernel.values[0] > 0:
        raise NonRealizableNoiseError(
            f"K(0) = {kernel.values[0]:.3e} > 0 implies negative noise variance"
        )
    labels = ("z",) + tuple(f"eta_{k}" for k in range(1, grid.n_steps + 1))
    cov = np.zeros((grid.n_steps + 1, grid.n_steps + 1))
    cov[0, 0] = z_var
    if grid.n_steps >= 1:
        cov[1:, 1:] = scipy.linalg.toeplitz(-kernel.values[: grid.n_steps] * z_var)
    repaired, log = repair_psd(cov)
    repaired[0, 1:] = 0.0
    repaired[1:, 0] = 0.0
    repaired[0, 0] = z_var
    return CovarianceMatrix(labels=labels, matrix=repaired, repair_log=log)


def _noise_covariance_full_grid(kernel: ScalarSeries, z_var: float) -> CovarianceMatrix:
    """Like build_noise_covariance but with noise slots on t_0 .. t_N.

    The trapezoidal integrator consumes eta on the whole grid including
    t_0, so the coarse-graining pipeline samples this extended layout.
    """
    grid = kernel.grid
    if kernel.values[0] > 0:
        raise NonRealizableNoiseError(
            f"K(0) = {kernel.values[0]:.3e} > 0 implies negative noise variance"
        )
    n = grid.n_nodes
    labels = ("z",) + tuple(f"eta_{k}" for k in range(n))
    cov = np.zeros((n + 1, n + 1))
    cov[0, 0] = z_var
    cov[1:, 1:] = scipy.linalg.toeplitz(-kernel.values * z_var)
    repaired, log = repair_psd(cov)
    repaired[0, 1:] = 0.0
    repaired[1:, 0] = 0.0
    repaired[0, 0] = z_var
    return CovarianceMatrix(labels=labels, matrix=repaired, repair_log=log)


def _cholesky_factor(cov: CovarianceMatrix) -> np.ndarray:
    matrix = cov.matrix
    try:
        return np.linalg.cholesky(matrix)
    except np.linalg.LinAlgError:
        jitter = 1e-12 * np.trace(matrix) / cov.size
        try:
            return np.linalg.cholesky(matrix + jitter * np.eye(cov.size))
        except np.linalg.LinAlgError as exc:
            raise FactorizationError(
                f"Cholesky failed even with diagonal jitter {jitter:.3e}"
            ) from exc


def sample_gaussian(
    cov: CovarianceMatrix, n_samples: int, seed: int, workers: int | None = None
) -> np.ndarray:
    """Mean-zero joint normal draws, shape (n_samples, cov.size).

    Row m is a deterministic function of (seed, m) alone.
    """
    if n_samples < 1:
        raise WorkbenchError(f"need at least one sample, got {n_samples}")
    factor = _cholesky_factor(cov)
    out = np.empty((n_samples, cov.size))

    def fill(start: int, stop: int) -> None:
        for m in range(start, stop):
            out[m] = factor @ _rng_for_row(seed, m).standard_normal(cov.size)

    run_chunked(fill, n_samples, workers)
    return out


def integrate_gle(
    kernel: ScalarSeries, z0: float, eta: ScalarSeries, grid: TimeGrid | None = None
) -> ScalarSeries:
    """March dz/dt = int_0^t K(s) z(t-s) ds + eta(t) from z(0) = z0.

    Trapezoid both for the time step and for the memory sum; the newest
    value enters the memory term and is solved for implicitly.
    """
    if grid is not None:
        require_same_grid(kernel, eta, grid)
    else:
        require_same_grid(kernel, eta)
    grid = kernel.grid
    z = _integrate_gle_values(kernel.values, float(z0), eta.values, grid.dt)
    return ScalarSeries(grid, z)


def _integrate_gle_values(kvals: np.ndarray, z0: float, evals: np.ndarray, dt: float) -> np.ndarray:
    n = len(kvals)
    z = np.empty(n)
    z[0] = z0
    if n == 1:
        return z
    # memory[k] = trapezoid of int_0^{t_k} K(s) z(t_k - s) ds
    memory = np.empty(n)
    memory[0] = 0.0
    pivot = 1.0 - 0.25 * dt * dt * kvals[0]
    if abs(pivot) < 1e-12:
        raise WorkbenchError(f"implicit GLE step pivot {pivot:.3e} is numerically singular")
    rev = kvals[::-1]
    for k in range(1, n):
        # known part of the memory trapezoid at t_k (excludes the z_k term)
        partial = 0.5 * kvals[k] * z[0] + (rev[n - k : n - 1] @ z[1:k] if k > 1 else 0.0)
        rhs = z[k - 1] + 0.5 * dt * (memory[k - 1] + evals[k - 1] + evals[k] + dt * partial)
        z[k] = rhs / pivot
        memory[k] = dt * (partial + 0.5 * kvals[0] * z[k])
    return z


def empirical_acf(ensemble: TrajectoryEnsemble):
    """Ensemble autocorrelation against the initial value, with errors.

    Returns (acf, se): acf(t_k) = mean_m z_m(t_k) z_m(0), se its standard
    error.  Needs at least MIN_ACF_SAMPLES realizations.
    """
    m = ensemble.n_realizations
    if m < MIN_ACF_SAMPLES:
        raise EstimatorError(
            f"autocorrelation estimator needs at least {MIN_ACF_SAMPLES} realizations, got {m}"
        )
    products = ensemble.data * ensemble.data[:, :1]
    acf = products.mean(axis=0)
    se = products.std(axis=0, ddof=1) / np.sqrt(m)
    return ScalarSeries(ensemble.grid, acf), ScalarSeries(ensemble.grid, se)


def coarse_grained_ensemble(
    acf: ScalarSeries,
    n_samples: int,
    seed: int,
    method: str = "direct",
    workers: int | None = None,
) -> TrajectoryEnsemble:
    """Sample M coarse-grained paths whose population law matches ``acf``.

    ``direct`` draws whole paths from the Gaussian with covariance
    C(t_m - t_n); ``gle`` extracts the kernel, samples initial value and
    noise, and integrates the memory equation.  Both produce the same law
    (up to the dt^2 discretization of the integrator), which is the point
    of the comparison. ``spectral`` delegates to the circulant sampler.
    """
    if method == "spectral":
        return sample_stationary_spectral(acf, n_samples, seed, workers=workers)
    if method not in ("gle", "direct"):
        raise WorkbenchError(f"unknown method {method!r}")
    grid = acf.grid
    c0 = acf.values[0]
    if c0 <= 0:
        raise WorkbenchError(f"C(0) = {c0} must be positive")

    if method == "direct":
        labels = tuple(f"z_{k}" for k in range(grid.n_nodes))
        toe = scipy.linalg.toeplitz(acf.values)
        repaired, log = repair_psd(toe)
        cov = CovarianceMatrix(labels=labels, matrix=repaired, repair_log=log)
        data = sample_gaussian(cov, n_samples, seed, workers=workers)
        return TrajectoryEnsemble(grid=grid, data=data, seed=seed, method="direct")

    kernel = kernel_from_acf(acf)
    if kernel.values[0] > 0:
        raise NonRealizableNoiseError(
            f"extracted kernel has K(0) = {kernel.values[0]:.3e} > 0"
        )
    cov = _noise_covariance_full_grid(kernel, z_var=c0)
    factor = _cholesky_factor(cov)
    data = np.empty((n_samples, grid.n_nodes))

    def fill(start: int, stop: int) -> None:
        for m in range(start, stop):
            draw = factor @ _rng_for_row(seed, m).standard_normal(cov.size)
            data[m] = _integrate_gle_values(kernel.values, draw[0], draw[1:], grid.dt)

    run_chunked(fill, n_samples, workers)
    return TrajectoryEnsemble(grid=grid, data=data, seed=seed, method="gle")


def sample_stationary_spectral(
    acf: ScalarSeries, n_samples: int, seed: int, workers: int | None = None
) -> TrajectoryEnsemble:
    """Circulant-embedding sampler for a stationary Gaussian path.

    The even periodic extension of the covariance diagonalizes in Fourier
    space, so paths are synthesized from independent Gaussian Fourier
    coefficients.  Negative spectral mass is clipped; more than
    CLIP_MASS_LIMIT of the total is a hard error (invalid embedding).
    """
    if n_samples < 1:
        raise WorkbenchError(f"need at least one sample, got {n_samples}")
    grid = acf.grid
    n = grid.n_nodes
    c = acf.values
    if grid.n_steps == 0:
        circ = c[:1].astype(float)
    else:
        circ = np.concatenate([c, c[-2:0:-1]])
    spectrum = np.fft.fft(circ).real
    negative = spectrum < 0.0
    clipped = float(-np.sum(spectrum[negative]))
    total = float(np.sum(np.abs(spectrum)))
    if total > 0 and clipped / total > CLIP_MASS_LIMIT:
        raise SpectralMassError(
            f"circulant embedding clipped {100 * clipped / total:.2f}% of the spectral mass"
        )
    lam = np.where(negative, 0.0, spectrum)
    m = len(circ)
    amplitude = np.sqrt(lam / m)
    data = np.empty((n_samples, n))

    def fill(start: int, stop: int) -> None:
        for i in range(start, stop):
            rng = _rng_for_row(seed, i)
            zeta = rng.standard_normal(m) + 1j * rng.standard_normal(m)
            path = np.fft.fft(amplitude * zeta)
            data[i] = path.real[:n]

    run_chunked(fill, n_samples, workers)
    return TrajectoryEnsemble(grid=grid, data=data, seed=seed, method="spectral")


def lag_z_statistics(a: TrajectoryEnsemble, b: TrajectoryEnsemble) -> np.ndarray:
    """Per-lag z-scores between the empirical ACFs of two ensembles."""
    require_same_grid(a.grid, b.grid)
    acf_a, se_a = empirical_acf(a)
    acf_b, se_b = empirical_acf(b)
    combined = np.sqrt(se_a.values**2 + se_b.values**2)
    combined = np.where(combined == 0.0, np.inf, combined)
    return (acf_a.values - acf_b.values) / combined


def two_sample_lag_test(a: TrajectoryEnsemble, b: TrajectoryEnsemble, alpha: float = 0.01):
    """Bonferroni-corrected per-lag z-test of equal path laws.

    Returns (passed, max |z|, threshold).  Deterministic for seeded
    ensembles.
    """
    from scipy.stats import norm as normal_dist

    z = lag_z_statistics(a, b)
    n_lags = len(z)
    threshold = float(normal_dist.ppf(1.0 - alpha / (2.0 * n_lags)))
    max_z = float(np.max(np.abs(z)))
    return max_z <= threshold, max_z, threshold
