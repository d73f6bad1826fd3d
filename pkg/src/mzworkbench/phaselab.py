"""Harmonic-oscillator phase-space laboratory.

Observables live on the (q, p) plane equipped with the standard bivariate
normal density; expectations are tensor-product Gauss-Hermite sums in the
probabilists' normalization.  The Liouville operator of h = (q^2 + p^2)/2
is p d/dq - q d/dp and its flow is the exact rotation of the plane, so
every identity here can be checked without an ODE integrator.

The conditional expectation onto functions of q (an infinite-rank
projection) composed with the Liouvillian is unbounded, which the
``unboundedness_ratio`` of the observables exp(n q - n^2) exhibits: the
ratio equals n and grows without bound.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.hermite_e import hermegauss

from .errors import EstimatorError, QuadratureError, WorkbenchError
from .series import ScalarSeries, TimeGrid
from .volterra import kernel_from_acf

_PARTIAL_CHECK_NODES = 10
_PARTIAL_CHECK_TOL = 1e-6
_PARTIAL_CHECK_STEP = 1e-5


@dataclass(frozen=True)
class PhaseObservable:
    """Function on the (q, p) plane, optionally with analytic partials.

    ``value`` (and the partials, when given) must accept numpy arrays and
    broadcast.  Supplied partials are spot-checked against central
    differences at seeded random nodes.
    """

    value: object
    dq: object = None
    dp: object = None
    check_partials: bool = True

    def __post_init__(self):
        if (self.dq is None) != (self.dp is None):
            raise WorkbenchError("provide both partial derivatives or neither")
        if self.dq is not None and self.check_partials:
            self._validate_partials()

    def _validate_partials(self):
        rng = np.random.default_rng(2024)
        pts = rng.standard_normal((_PARTIAL_CHECK_NODES, 2))
        h = _PARTIAL_CHECK_STEP
        for q, p in pts:
            fd_q = (self.value(q + h, p) - self.value(q - h, p)) / (2 * h)
            fd_p = (self.value(q, p + h) - self.value(q, p - h)) / (2 * h)
            for name, fd, exact in (("dq", fd_q, self.dq(q, p)), ("dp", fd_p, self.dp(q, p))):
                scale = max(1.0, abs(exact), abs(self.value(q, p)))
                if abs(fd - exact) > _PARTIAL_CHECK_TOL * scale:
                    raise WorkbenchError(
                        f"analytic partial {name} disagrees with central differences "
                        f"at (q, p) = ({q:.4f}, {p:.4f}): {exact:.6e} vs {fd:.6e}"
                    )

    def has_partials(self) -> bool:
        return self.dq is not None


def observable_xn(n: int) -> PhaseObservable:
    """The unit-norm observable exp(n q - n^2), a function of q alone."""
    if n < 0 or int(n) != n:
        raise WorkbenchError(f"n must be a nonnegative integer, got {n}")

    def value(q, p):
        return np.exp(n * q - n * n) * np.ones_like(np.asarray(p, dtype=float))

    return PhaseObservable(
        value=value,
        dq=lambda q, p: n * value(q, p),
        dp=lambda q, p: np.zeros_like(np.asarray(q, dtype=float) + p),
        check_partials=False,
    )


@dataclass(frozen=True)
class QuadratureGrid:
    """Tensor Gauss-Hermite grid for the standard bivariate normal.

    ``shift_q`` recenters the q nodes for integrands concentrated away
    from the origin; the density ratio is folded into the weights so the
    shifted rule still integrates against the original measure.
    """

    n_q: int = 64
    n_p: int = 64
    shift_q: float = 0.0

    def __post_init__(self):
        if self.n_q < 1 or self.n_p < 1:
            raise WorkbenchError("node counts must be positive")

    def axis(self, n: int):
        nodes, weights = hermegauss(n)
        return nodes, weights / np.sqrt(2.0 * np.pi)

    @property
    def nodes_q(self) -> np.ndarray:
        return self.axis(self.n_q)[0] + self.shift_q

    @property
    def nodes_p(self) -> np.ndarray:
        return self.axis(self.n_p)[0]

    @property
    def weights_q(self) -> np.ndarray:
        nodes, weights = self.axis(self.n_q)
        if self.shift_q == 0.0:
            return weights
        s = self.shift_q
        return weights * np.exp(-s * nodes - 0.5 * s * s)

    @property
    def weights_p(self) -> np.ndarray:
        return self.axis(self.n_p)[1]

    def with_shift(self, shift_q: float) -> "QuadratureGrid":
        return dataclasses.replace(self, shift_q=float(shift_q))


def _evaluate(x: PhaseObservable, grid: QuadratureGrid) -> np.ndarray:
    q = grid.nodes_q[:, None]
    p = grid.nodes_p[None, :]
    # overflow surfaces as the explicit error below, not as a warning
    with np.errstate(over="ignore", invalid="ignore"):
        vals = np.asarray(x.value(q, p), dtype=float)
    vals = np.broadcast_to(vals, (grid.n_q, grid.n_p))
    if not np.all(np.isfinite(vals)):
        i, j = np.argwhere(~np.isfinite(vals))[0]
        raise QuadratureError(
            f"observable is non-finite at node (q, p) = "
            f"({grid.nodes_q[i]:.6g}, {grid.nodes_p[j]:.6g})"
        )
    return vals


def expectation(x: PhaseObservable, grid: QuadratureGrid) -> float:
    """Gaussian expectation E[x] by tensor-product quadrature."""
    vals = _evaluate(x, grid)
    return float(grid.weights_q @ vals @ grid.weights_p)


def observable_norm(x: PhaseObservable, grid: QuadratureGrid) -> float:
    """sqrt(E[x^2])."""
    squared = PhaseObservable(value=lambda q, p: np.asarray(x.value(q, p)) ** 2)
    return float(np.sqrt(max(expectation(squared, grid), 0.0)))


def liouville_apply(x: PhaseObservable) -> PhaseObservable:
    """Apply p d/dq - q d/dp using the observable's analytic partials."""
    if not x.has_partials():
        raise WorkbenchError("Liouville operator needs analytic partial derivatives")
    return PhaseObservable(value=lambda q, p: p * x.dq(q, p) - q * x.dp(q, p))


def zwanzig_project(x: PhaseObservable, grid: QuadratureGrid):
    """Conditional expectation given q: returns the function of q alone.

    For the product-normal density this is a 1-D Gauss-Hermite average
    over p at each q, so projecting a function of q returns it unchanged
    and projecting twice equals projecting once.
    """
    wp = grid.weights_p
    nodes_p = grid.nodes_p

    def conditioned(q):
        q = np.asarray(q, dtype=float)
        with np.errstate(over="ignore", invalid="ignore"):
            vals = np.asarray(x.value(q[..., None], nodes_p), dtype=float)
        vals = np.broadcast_to(vals, q.shape + (len(nodes_p),))
        if not np.all(np.isfinite(vals)):
            raise QuadratureError("observable is non-finite on the conditioning grid")
        return vals @ wp

    return conditioned


def unboundedness_ratio(n: int, grid: QuadratureGrid) -> float:
    """||L P_Z x_n|| / ||x_n|| for x_n = exp(n q - n^2); equals n.

    x_n is already a function of q, so the conditional expectation leaves
    it alone and L x_n = n p x_n.  Both norms use the grid recentered at
    q = 2n, where the integrand x_n^2 * density peaks.
    """
    if n < 0:
        raise WorkbenchError(f"n must be nonnegative, got {n}")
    if n == 0:
        return 0.0
    shifted = grid.with_shift(2.0 * n)
    xn = observable_xn(n)
    numerator = observable_norm(liouville_apply(xn), shifted)
    denominator = observable_norm(xn, shifted)
    if denominator == 0.0:
        raise QuadratureError(f"||x_n|| underflowed at n = {n}; increase node count")
    return numerator / denominator


def oscillator_flow(q0, p0, times: np.ndarray):
    """Exact rotation flow of the unit harmonic oscillator.

    Returns (q(t), p(t)) with q(t) = q0 cos t + p0 sin t and
    p(t) = -q0 sin t + p0 cos t; energy is conserved exactly up to
    round-off.
    """
    times = np.asarray(times, dtype=float)
    c, s = np.cos(times), np.sin(times)
    return q0 * c + p0 * s, -q0 * s + p0 * c


def oscillator_trajectories(n_samples: int, horizon: float, dt: float, seed: int):
    """Ensemble of exact position trajectories with normal initial data.

    Initial conditions are drawn per (seed, realization index); the flow
    itself is evaluated in closed form, never integrated numerically.
    """
    from .glesim import TrajectoryEnsemble, _rng_for_row

    if n_samples < 1:
        raise EstimatorError(f"need at least one trajectory, got {n_samples}")
    n_steps = int(round(horizon / dt))
    if n_steps < 1:
        raise WorkbenchError(f"horizon {horizon} shorter than one step {dt}")
    grid = TimeGrid(dt, n_steps)
    times = grid.times
    c, s = np.cos(times), np.sin(times)
    data = np.empty((n_samples, grid.n_nodes))
    for m in range(n_samples):
        q0, p0 = _rng_for_row(seed, m).standard_normal(2)
        data[m] = q0 * c + p0 * s
    return TrajectoryEnsemble(grid=grid, data=data, seed=seed, method="oscillator")


def oscillator_acf(grid: TimeGrid) -> ScalarSeries:
    """Position autocorrelation cos t of the unit oscillator."""
    return ScalarSeries(grid, np.cos(grid.times))


def oscillator_mori_kernel(grid: TimeGrid) -> ScalarSeries:
    """Memory kernel extracted from the exact cos autocorrelation.

    Uses the analytic derivative triple (cos, -sin, -cos), so the only
    error is the dt^2 of the Volterra marching; the exact kernel is -1.
    """
    t = grid.times
    return kernel_from_acf(
        ScalarSeries(grid, np.cos(t)),
        d_acf=ScalarSeries(grid, -np.sin(t)),
        d2_acf=ScalarSeries(grid, -np.cos(t)),
    )
