"""Fast/slow splitting along the spectral planes of a skew generator.

The slow subspace at cutoff ``omega`` collects every vector whose whole
derivative tower is controlled, ||L^n x|| <= omega^n ||x||; in finite
dimensions that is exactly the span of the rotation planes with frequency
at most omega plus the kernel of L.  The induced orthogonal projection
commutes with the dynamics, so the projected generator is bounded by
omega, the complement evolves autonomously, and the memory coupling of
the associated evolution equation vanishes. A generic projection couples
the two subspaces, which is what the contrast case demonstrates.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import NotInFastSubspaceError, WorkbenchError
from .hilbert import Generator, HilbertSpace, propagate

PROJECTION_TOL = 1e-12
MEMBERSHIP_SLACK = 1e-10


@dataclass(frozen=True, eq=False)
class SlowSubspace:
    """Orthonormal bases of the slow subspace and its complement."""

    omega: float
    basis: np.ndarray = field(repr=False)             # (n_slow, dim)
    complement_basis: np.ndarray = field(repr=False)  # (n_fast, dim)
    space: HilbertSpace = field(repr=False)

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    def projector(self) -> np.ndarray:
        """Matrix of the orthogonal projection onto the slow subspace."""
        w = self.space.weight_vector
        if self.dim == 0:
            return np.zeros((self.space.dim, self.space.dim))
        return self.basis.T @ (self.basis * w)

    def complement_projector(self) -> np.ndarray:
        return np.eye(self.space.dim) - self.projector()


def slow_subspace(generator: Generator, omega: float) -> SlowSubspace:
    """Span of the rotation planes with frequency <= omega plus ker L."""
    if not np.isfinite(omega) or omega <= 0:
        raise WorkbenchError(f"cutoff frequency must be positive, got {omega}")
    dec = generator.spectral
    slow_rows = [dec.kernel_basis] if dec.kernel_basis.size else []
    fast_rows = []
    for f, plane in zip(dec.frequencies, dec.plane_basis):
        # closed inequality: a plane exactly at the cutoff is slow
        if f <= omega * (1.0 + MEMBERSHIP_SLACK):
            slow_rows.append(plane)
        else:
            fast_rows.append(plane)
    n = generator.dim
    basis = np.vstack(slow_rows) if slow_rows else np.zeros((0, n))
    complement = np.vstack(fast_rows) if fast_rows else np.zeros((0, n))
    return SlowSubspace(
        omega=float(omega), basis=basis, complement_basis=complement, space=generator.space
    )


def is_slow(
    x: np.ndarray, generator: Generator, omega: float, n_max: int = 8
) -> tuple[bool, int | None]:
    """Certify ||L^n x|| <= omega^n ||x|| for n = 1 .. n_max.

    Returns (True, None) on success, else (False, first failing power).
    This is the power-inequality route, independent of the spectral
    construction in :func:`slow_subspace`.
    """
    if n_max < 1:
        raise WorkbenchError(f"n_max must be >= 1, got {n_max}")
    space = generator.space
    x = space.check_vector(x)
    w = space.weight_vector
    base = float(np.sqrt((x * w) @ x))
    if base == 0.0:
        return True, None
    y = x
    for n in range(1, n_max + 1):
        y = generator.matrix @ y
        if float(np.sqrt((y * w) @ y)) > (omega**n) * base * (1.0 + MEMBERSHIP_SLACK):
            return False, n
    return True, None


def _weighted_operator_norm(matrix: np.ndarray, space: HilbertSpace) -> float:
    """Largest singular value with respect to the weighted norm."""
    if space.weights is None:
        return float(np.linalg.norm(matrix, 2))
    r = np.sqrt(space.weights)
    return float(np.linalg.norm((r[:, None] * matrix) / r[None, :], 2))


def projected_generator_bound(generator: Generator, omega: float) -> float:
    """Operator norm of P_omega L; never exceeds omega."""
    sub = slow_subspace(generator, omega)
    return _weighted_operator_norm(sub.projector() @ generator.matrix, generator.space)


def memory_coupling_norm(projection: np.ndarray, generator: Generator) -> float:
    """Operator norm of P L (1 - P), the coupling driving the memory term.

    Accepts any orthogonal projection matrix (idempotent and symmetric in
    the weighted product to PROJECTION_TOL).  For the spectral projection
    the value vanishes; for generic projections it is reported as is.
    """
    space = generator.space
    p = np.asarray(projection, dtype=float)
    if p.shape != (space.dim, space.dim):
        raise WorkbenchError(f"projection shape {p.shape} does not match dim {space.dim}")
    scale = max(1.0, float(np.max(np.abs(p))))
    if np.max(np.abs(p @ p - p)) > PROJECTION_TOL * scale * 10:
        raise WorkbenchError("matrix is not idempotent: not a projection")
    w = space.weight_vector
    wp = w[:, None] * p
    if np.max(np.abs(wp - wp.T)) > PROJECTION_TOL * scale * max(np.max(w), 1.0) * 10:
        raise WorkbenchError("matrix is not self-adjoint in the weighted product")
    coupling = p @ generator.matrix @ (np.eye(space.dim) - p)
    return _weighted_operator_norm(coupling, space)


def orthogonal_equals_full_on_fast(
    generator: Generator, omega: float, x: np.ndarray, t: float
) -> float:
    """Residual || exp(t Q L) x - exp(t L) x || for x in the fast subspace.

    On the complement of the slow subspace the perturbed evolution reduces
    to the full one; the residual certifies that at a given (x, t).
    """
    space = generator.space
    x = space.check_vector(x)
    sub = slow_subspace(generator, omega)
    w = space.weight_vector
    xnorm = float(np.sqrt((x * w) @ x))
    if sub.dim > 0 and xnorm > 0:
        overlaps = sub.basis @ (w * x)
        if np.max(np.abs(overlaps)) > 1e-10 * xnorm:
            raise NotInFastSubspaceError(
                f"x has slow-subspace overlap {np.max(np.abs(overlaps)):.3e}"
            )
    reduced = scipy.linalg.expm(float(t) * (sub.complement_projector() @ generator.matrix)) @ x
    full = propagate(generator, t, x)
    diff = reduced - full
    return float(np.sqrt((diff * w) @ diff))
